#pragma once

#include <string>
#include <string_view>

namespace gazenlq::log {

enum class Level { debug = 0, info = 1, warn = 2 };

/// Reads GAZENLQ_LOG={debug,info,warn}; anything else keeps the default (info).
void init_from_env();
void set_level(Level level);
Level level();

/// Timestamped line on stderr when `lvl` is at or above the active level.
void write(Level lvl, std::string_view message);

/// printf-style formatting into a std::string.
std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }

}  // namespace gazenlq::log
