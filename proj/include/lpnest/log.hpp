#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace lpnest::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Verbosity threshold, read once from the LPNEST_LOG environment variable
/// (one of "error", "info", "debug"; default "error").
inline Level level() {
    static const Level lv = [] {
        const char* env = std::getenv("LPNEST_LOG");
        if (env == nullptr) return Level::error;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        if (std::strcmp(env, "info") == 0) return Level::info;
        return Level::error;
    }();
    return lv;
}

inline void write(Level lv, const std::string& msg) {
    if (lv > level()) return;
    const char* tag = lv == Level::error ? "error" : lv == Level::info ? "info" : "debug";
    std::fprintf(stderr, "[lpnest:%s] %s\n", tag, msg.c_str());
}

inline void error(const std::string& msg) { write(Level::error, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

}  // namespace lpnest::log
