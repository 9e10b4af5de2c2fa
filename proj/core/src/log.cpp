#include "radiomap/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace radiomap {

namespace {

LogLevel threshold_from_env() {
    const char* v = std::getenv("RADIOMAP_LOG");
    if (v == nullptr) return LogLevel::error;
    if (std::strcmp(v, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(v, "info") == 0) return LogLevel::info;
    return LogLevel::error;
}

}  // namespace

bool log_enabled(LogLevel level) {
    static const LogLevel threshold = threshold_from_env();
    return static_cast<int>(level) <= static_cast<int>(threshold);
}

void log_line(LogLevel level, const std::string& message) {
    if (!log_enabled(level)) return;
    const char* tag = level == LogLevel::debug ? "debug" : (level == LogLevel::info ? "info" : "error");
    std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

}  // namespace radiomap
