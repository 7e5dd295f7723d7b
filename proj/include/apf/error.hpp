#pragma once

#include <stdexcept>
#include <string>

namespace apf {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range or inconsistent arguments to an operation.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf, degenerate denominators, undefined metrics.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File system and codec failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace apf
