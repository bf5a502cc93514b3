#pragma once

namespace asv {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Current threshold, read once from the ASV_LOG_LEVEL environment variable
// (error|warn|info|debug, default warn).
LogLevel log_threshold();

bool log_enabled(LogLevel level);

// printf-style message to stderr, filtered by the threshold.
void log_emit(LogLevel level, const char* fmt, ...) __attribute__((format(printf, 2, 3)));

}  // namespace asv

#define ASV_LOG(level, ...)                                          \
  do {                                                               \
    if (::asv::log_enabled(::asv::LogLevel::level)) {                \
      ::asv::log_emit(::asv::LogLevel::level, __VA_ARGS__);          \
    }                                                                \
  } while (0)
