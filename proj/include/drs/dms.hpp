#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "drs/model.hpp"

namespace drs {

enum class Axis { lat, lon };

// Parses `D° M' S.ss" H` into signed decimal degrees (negative for S and W).
// Minutes and seconds must lie in [0, 60); the fractional part of the seconds
// is optional. When `axis` is given, a hemisphere letter for the other axis is
// rejected. ASCII 'd' is accepted in place of the degree sign and the Unicode
// prime/double-prime marks in place of ' and ".
//
// Throws ParseError on malformed or out-of-range input.
double parse_dms(std::string_view text, std::optional<Axis> axis = std::nullopt);

// Inverse of parse_dms. Seconds are rounded to two decimals and carried into
// minutes/degrees when they round up to 60. Zero is rendered as N / E.
//
// Throws ValidationError if the value is outside the axis range.
std::string format_dms(double value, Axis axis);

// Accepts either a decimal pair "17.9998,-66.6204" (lat first) or a DMS pair
// in any order, e.g. `66° 37' 13.44" W, 17° 59' 59.28" N`.
GeoPoint parse_coordinate_pair(std::string_view text);

}  // namespace drs
