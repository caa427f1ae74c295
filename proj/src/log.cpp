#include "mmrec/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mmrec {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warning};
std::mutex g_mutex;

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << tag << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) noexcept { g_level = level; }
LogLevel log_level() noexcept { return g_level; }

void log_warning(std::string_view message) {
  if (g_level >= LogLevel::warning) emit("warning: ", message);
}

void log_info(std::string_view message) {
  if (g_level >= LogLevel::info) emit("", message);
}

}  // namespace mmrec
