#include "gazenlq/core/log.hpp"

#include <atomic>
#include <cstdarg>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <algorithm>
#include <mutex>

namespace gazenlq::log {

namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

const char* tag(Level l) {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
    }
    return "?";
}

}  // namespace

void init_from_env() {
    const char* v = std::getenv("GAZENLQ_LOG");
    if (!v) return;
    const std::string s(v);
    if (s == "debug") set_level(Level::debug);
    else if (s == "info") set_level(Level::info);
    else if (s == "warn") set_level(Level::warn);
}

std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list copy;
    va_copy(copy, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, copy);
    va_end(copy);
    std::string out(static_cast<size_t>(std::max(n, 0)), '\0');
    std::vsnprintf(out.data(), out.size() + 1, fmt, args);
    va_end(args);
    return out;
}

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level lvl, std::string_view message) {
    if (static_cast<int>(lvl) < static_cast<int>(g_level.load())) return;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%d %H:%M:%S", &tm);
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[%s] [%s] %.*s\n", stamp, tag(lvl), static_cast<int>(message.size()), message.data());
}

}  // namespace gazenlq::log
