#pragma once

#include <string_view>

namespace mmrec {

enum class LogLevel { quiet, warning, info };

void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

/// Thread-safe writes to stderr.
void log_warning(std::string_view message);
void log_info(std::string_view message);

}  // namespace mmrec
