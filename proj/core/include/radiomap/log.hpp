#pragma once

#include <string>

namespace radiomap {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Threshold read once from RADIOMAP_LOG (error|info|debug); defaults to error.
bool log_enabled(LogLevel level);

/// Write one line to stderr if the level is enabled.
void log_line(LogLevel level, const std::string& message);

}  // namespace radiomap
