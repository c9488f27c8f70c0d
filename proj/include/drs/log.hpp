#pragma once

#include <atomic>
#include <cstdio>
#include <string>

#include <fmt/format.h>

// Diagnostics on standard error. Messages must never contain API keys or
// full prompt text.
namespace drs::log {

enum class Verbosity { quiet = 0, normal = 1, verbose = 2 };

inline std::atomic<Verbosity>& verbosity() {
  static std::atomic<Verbosity> level{Verbosity::normal};
  return level;
}

inline void set_verbosity(Verbosity v) { verbosity().store(v); }

inline void write(std::string_view prefix, const std::string& message) {
  fmt::print(stderr, "{}{}\n", prefix, message);
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  if (verbosity().load() >= Verbosity::normal) {
    write("", fmt::format(f, std::forward<Args>(args)...));
  }
}

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  if (verbosity().load() >= Verbosity::verbose) {
    write("debug: ", fmt::format(f, std::forward<Args>(args)...));
  }
}

// Errors are printed at every verbosity.
template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  write("error: ", fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace drs::log
