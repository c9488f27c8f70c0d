#pragma once

#include <span>
#include <string>
#include <vector>

#include "drs/ingest.hpp"
#include "drs/model.hpp"

namespace drs::geo {

// Mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct BoundingBox {
  GeoPoint min_corner;
  GeoPoint max_corner;

  bool contains(const GeoPoint& p) const {
    return p.lat >= min_corner.lat && p.lat <= max_corner.lat && p.lon >= min_corner.lon &&
           p.lon <= max_corner.lon;
  }

  bool operator==(const BoundingBox&) const = default;
};

// Haversine great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Ids of structures within radius_km of center (inclusive), nearest first,
// ties broken by structure_id. Throws ValidationError for a negative radius.
std::vector<std::string> select_in_radius(const GeoPoint& center, double radius_km,
                                          std::span<const StructureMetadata> structures);

// Componentwise min/max. Throws ValidationError for an empty input or one
// whose longitudes span more than 180 degrees (antimeridian crossing is not
// supported).
BoundingBox bounding_box(std::span<const GeoPoint> points);

class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

// Throws EmptyRegionError when no structure lies within the radius.
Region build_region(std::string name, const GeoPoint& center, double radius_km,
                    const Dataset& dataset);

// "17.9998, -66.6204" (four decimals, lat first).
std::string format_decimal(const GeoPoint& p);
// "17.9998, -66.6204 to 18.0074, -66.6125"
std::string format_corners(const BoundingBox& box);

}  // namespace drs::geo
