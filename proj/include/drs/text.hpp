#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace drs::text {

using Variables = std::map<std::string, std::string, std::less<>>;

// Substitutes `{{name}}` placeholders. Throws ParseError for a placeholder
// without a value or an unterminated `{{`.
std::string render_template(std::string_view tmpl, const Variables& vars);

// Shortest round-trip decimal form ("6.4", "2", "0.001").
std::string format_number(double value);

// Magnitude with at least one decimal ("6.4", "7.0").
std::string format_magnitude(double value);

// "one" .. "ten" for 1..10, digits otherwise.
std::string number_word(int value);

std::string capitalize(std::string_view s);

// Collapses CR/LF into single spaces so the value stays on one line.
std::string single_line(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view text);

std::string_view trim(std::string_view s);

// ceil(characters / 4), counting UTF-8 bytes as characters.
std::size_t estimate_tokens(std::string_view text);

// FNV-1a 64-bit as 16 hex digits; stable across platforms.
std::string fnv1a_hex(std::string_view data);

}  // namespace drs::text
