#include "defect/util.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace defect {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("DEFECTIVITY_LOG");
    if (!env) return LogLevel::Warn;
    if (!std::strcmp(env, "silent") || !std::strcmp(env, "0")) return LogLevel::Silent;
    if (!std::strcmp(env, "warn") || !std::strcmp(env, "1")) return LogLevel::Warn;
    if (!std::strcmp(env, "info") || !std::strcmp(env, "2")) return LogLevel::Info;
    if (!std::strcmp(env, "debug") || !std::strcmp(env, "3")) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void logf(LogLevel level, const char* fmt, ...) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* tags[] = {"", "[warn] ", "[info] ", "[debug] "};
  std::fputs(tags[static_cast<int>(level)], stderr);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

}  // namespace defect
