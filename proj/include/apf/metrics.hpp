#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "apf/bundle.hpp"
#include "apf/signal.hpp"

namespace apf::metrics {

// Normalizer of the mean absolute error. `NMinusOne` divides the sum of n
// absolute differences by n - 1; `N` is the conventional mean.
enum class MaeNorm { NMinusOne, N };

std::string to_string(MaeNorm norm);
MaeNorm parse_mae_norm(const std::string& name);

// Throws ParameterError on length mismatch or fewer than two samples.
double mae(std::span<const double> y_hat, std::span<const double> y, MaeNorm norm = MaeNorm::NMinusOne);
// Throws ParameterError on length mismatch or empty input.
double mse(std::span<const double> y_hat, std::span<const double> y);
// Squared error over target energy. Throws NumericError for a zero-energy
// target, where the ratio is undefined.
double esr(std::span<const double> y_hat, std::span<const double> y);

struct Scores {
  double mae = 0.0;
  double mse = 0.0;
  double esr = 0.0;

  bool operator==(const Scores&) const = default;
};

Scores score(std::span<const double> y_hat, std::span<const double> y, MaeNorm norm = MaeNorm::NMinusOne);

// Prediction (bundle applied to the input) and the unshifted input, both
// against the target.
struct MetricsReport {
  Scores prediction;
  Scores reference;
  MaeNorm mae_norm = MaeNorm::NMinusOne;
  std::size_t samples = 0;
  int sample_rate = 0;
  std::string config_hash;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  // Aligned text table, one row per compared signal.
  std::string table() const;
};

MetricsReport evaluate(const train::CoefficientBundle& bundle, const Signal& input, const Signal& target,
                       MaeNorm norm = MaeNorm::NMinusOne);

}  // namespace apf::metrics
