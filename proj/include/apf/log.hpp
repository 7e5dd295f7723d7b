#pragma once

#include <functional>
#include <string_view>

namespace apf {

using WarningHandler = std::function<void(std::string_view)>;

// Installs a sink for library warnings and returns the previous one.
// The default sink prints "warning: <message>" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace apf
