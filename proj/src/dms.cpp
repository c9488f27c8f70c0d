#include "drs/dms.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

namespace drs {
namespace {

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) {
      ++pos_;
    }
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::string_view digits() {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::optional<char> next() {
    if (pos_ >= text_.size()) {
      return std::nullopt;
    }
    return text_[pos_++];
  }

  bool done() const { return pos_ == text_.size(); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void fail(std::string_view text, std::string_view why) {
  throw ParseError(fmt::format("invalid DMS coordinate \"{}\": {}", text, why));
}

double to_number(std::string_view text, std::string_view original) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(original, "bad number");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_plain_decimal(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

Axis hemisphere_axis(std::string_view dms) {
  const auto t = trim(dms);
  const char h = t.empty() ? '\0' : t.back();
  return (h == 'N' || h == 'S' || h == 'n' || h == 's') ? Axis::lat : Axis::lon;
}

}  // namespace

double parse_dms(std::string_view text, std::optional<Axis> axis) {
  Scanner in(text);
  in.skip_space();

  const auto deg_text = in.digits();
  if (deg_text.empty()) {
    fail(text, "missing degrees");
  }
  in.skip_space();
  if (!(in.consume("°") || in.consume("º") || in.consume("d"))) {
    fail(text, "missing degree sign");
  }

  in.skip_space();
  const auto min_text = in.digits();
  if (min_text.empty()) {
    fail(text, "missing minutes");
  }
  in.skip_space();
  if (!(in.consume("'") || in.consume("′"))) {
    fail(text, "missing minute mark");
  }

  in.skip_space();
  std::string sec_text(in.digits());
  if (sec_text.empty()) {
    fail(text, "missing seconds");
  }
  if (in.consume(".")) {
    const auto frac = in.digits();
    if (frac.empty()) {
      fail(text, "missing digits after decimal point");
    }
    sec_text += ".";
    sec_text += frac;
  }
  in.skip_space();
  if (!(in.consume("\"") || in.consume("''") || in.consume("″"))) {
    fail(text, "missing second mark");
  }

  in.skip_space();
  const auto hemi = in.next();
  in.skip_space();
  if (!hemi || !in.done()) {
    fail(text, "expected a single hemisphere letter N, S, E or W at the end");
  }

  Axis hemi_axis = Axis::lat;
  bool negative = false;
  switch (*hemi) {
    case 'N': case 'n': hemi_axis = Axis::lat; break;
    case 'S': case 's': hemi_axis = Axis::lat; negative = true; break;
    case 'E': case 'e': hemi_axis = Axis::lon; break;
    case 'W': case 'w': hemi_axis = Axis::lon; negative = true; break;
    default: fail(text, fmt::format("unknown hemisphere '{}'", *hemi));
  }
  if (axis && *axis != hemi_axis) {
    fail(text, *axis == Axis::lat ? "longitude hemisphere on a latitude value"
                                  : "latitude hemisphere on a longitude value");
  }

  const double degrees = to_number(deg_text, text);
  const double minutes = to_number(min_text, text);
  const double seconds = to_number(sec_text, text);
  if (minutes >= 60.0) {
    fail(text, "minutes must be < 60");
  }
  if (seconds >= 60.0) {
    fail(text, "seconds must be < 60");
  }

  const double magnitude = degrees + minutes / 60.0 + seconds / 3600.0;
  const double limit = hemi_axis == Axis::lat ? 90.0 : 180.0;
  if (magnitude > limit) {
    fail(text, fmt::format("exceeds {} degrees", limit));
  }
  return negative ? -magnitude : magnitude;
}

std::string format_dms(double value, Axis axis) {
  const double limit = axis == Axis::lat ? 90.0 : 180.0;
  if (!std::isfinite(value) || std::abs(value) > limit) {
    throw ValidationError(axis == Axis::lat ? "lat" : "lon",
                          fmt::format("{} outside [-{}, {}]", value, limit, limit));
  }
  // Work in hundredths of an arc-second so rounding carries exactly.
  const auto total = static_cast<std::int64_t>(std::llround(std::abs(value) * 360000.0));
  const auto degrees = total / 360000;
  const auto minutes = (total % 360000) / 6000;
  const auto centis = total % 6000;

  char hemi = 'N';
  if (axis == Axis::lat) {
    hemi = (value < 0.0 && total != 0) ? 'S' : 'N';
  } else {
    hemi = (value < 0.0 && total != 0) ? 'W' : 'E';
  }
  return fmt::format("{}° {}' {}.{:02d}\" {}", degrees, minutes, centis / 100, centis % 100,
                     hemi);
}

GeoPoint parse_coordinate_pair(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
    throw ParseError(fmt::format("expected \"lat,lon\" or a DMS pair, got \"{}\"", text));
  }
  const auto first = text.substr(0, comma);
  const auto second = text.substr(comma + 1);

  const auto a = parse_plain_decimal(first);
  const auto b = parse_plain_decimal(second);
  if (a && b) {
    auto issues = check(GeoPoint{*a, *b});
    if (!issues.empty()) {
      throw ParseError(fmt::format("coordinate \"{}\": {}", text, issues.front().message));
    }
    return GeoPoint{*a, *b};
  }
  if (a || b) {
    throw ParseError(fmt::format("coordinate \"{}\" mixes decimal and DMS notation", text));
  }

  const Axis first_axis = hemisphere_axis(first);
  const Axis second_axis = hemisphere_axis(second);
  if (first_axis == second_axis) {
    throw ParseError(fmt::format("coordinate \"{}\" needs one latitude and one longitude", text));
  }
  const double v1 = parse_dms(first, first_axis);
  const double v2 = parse_dms(second, second_axis);
  return first_axis == Axis::lat ? GeoPoint{v1, v2} : GeoPoint{v2, v1};
}

}  // namespace drs
