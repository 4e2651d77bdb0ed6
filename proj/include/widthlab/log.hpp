#pragma once

#include <functional>
#include <string>

namespace widthlab {

using WarningHandler = std::function<void(const std::string&)>;

// Default handler writes "widthlab: warning: ..." to stderr. Pass nullptr to silence.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

} // namespace widthlab
