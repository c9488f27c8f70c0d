#include "drs/text.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "drs/error.hpp"

namespace drs::text {

std::string render_template(std::string_view tmpl, const Variables& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw ParseError("template has an unterminated \"{{\"");
    }
    const auto name = trim(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end()) {
      throw ParseError(fmt::format("template placeholder \"{}\" has no value", name));
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::string format_number(double value) {
  return fmt::format("{}", value);
}

std::string format_magnitude(double value) {
  if (std::floor(value) == value) {
    return fmt::format("{:.1f}", value);
  }
  return format_number(value);
}

std::string number_word(int value) {
  static constexpr std::array<std::string_view, 10> kWords{
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  if (value >= 1 && value <= 10) {
    return std::string(kWords[static_cast<std::size_t>(value - 1)]);
  }
  return std::to_string(value);
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::string single_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (c == '\r' || c == '\n') {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      if (!out.empty() && out.back() != ' ') {
        out.push_back(' ');
      }
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) {
        lines.push_back(text.substr(start));
      }
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", hash);
}

}  // namespace drs::text
