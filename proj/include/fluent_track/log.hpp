#pragma once

#include <string_view>

namespace fluent_track {

enum class LogLevel { Error = 0, Warn, Info, Debug };

/// Level from FLUENT_TRACK_LOG (error, warn, info, debug); warn when unset or unrecognized.
LogLevel log_level();
void set_log_level(LogLevel level);

/// Thread-safe line to stderr when `level` is enabled.
void log(LogLevel level, std::string_view message);

}  // namespace fluent_track
