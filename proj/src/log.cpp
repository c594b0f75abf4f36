#include "fluent_track/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace fluent_track {

namespace {

LogLevel from_environment() {
    const char* v = std::getenv("FLUENT_TRACK_LOG");
    if (!v) return LogLevel::Warn;
    const std::string s(v);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

std::atomic<int>& current() {
    static std::atomic<int> level{static_cast<int>(from_environment())};
    return level;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

const char* label(LogLevel l) {
    switch (l) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "log";
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(current().load()); }

void set_log_level(LogLevel level) { current().store(static_cast<int>(level)); }

void log(LogLevel level, std::string_view message) {
    if (static_cast<int>(level) > current().load()) return;
    std::lock_guard lock(sink_mutex());
    std::cerr << "[" << label(level) << "] " << message << '\n';
}

}  // namespace fluent_track
