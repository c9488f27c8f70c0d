#include "drs/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace drs::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::vector<std::string> select_in_radius(const GeoPoint& center, double radius_km,
                                          std::span<const StructureMetadata> structures) {
  if (!std::isfinite(radius_km) || radius_km < 0.0) {
    throw ValidationError("radius_km", fmt::format("must be >= 0, got {}", radius_km));
  }
  std::vector<std::pair<double, const std::string*>> hits;
  for (const auto& s : structures) {
    const double d = haversine_km(center, s.location);
    if (d <= radius_km) {
      hits.emplace_back(d, &s.structure_id);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) {
      return x.first < y.first;
    }
    return *x.second < *y.second;
  });
  std::vector<std::string> ids;
  ids.reserve(hits.size());
  for (const auto& [d, id] : hits) {
    ids.push_back(*id);
  }
  return ids;
}

BoundingBox bounding_box(std::span<const GeoPoint> points) {
  if (points.empty()) {
    throw ValidationError("points", "bounding box of an empty point set");
  }
  BoundingBox box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min_corner.lat = std::min(box.min_corner.lat, p.lat);
    box.min_corner.lon = std::min(box.min_corner.lon, p.lon);
    box.max_corner.lat = std::max(box.max_corner.lat, p.lat);
    box.max_corner.lon = std::max(box.max_corner.lon, p.lon);
  }
  if (box.max_corner.lon - box.min_corner.lon > 180.0) {
    throw ValidationError("points", "longitudes span the antimeridian");
  }
  return box;
}

Region build_region(std::string name, const GeoPoint& center, double radius_km,
                    const Dataset& dataset) {
  require_valid(center);
  auto members = select_in_radius(center, radius_km, dataset.structures);
  if (members.empty()) {
    throw EmptyRegionError(fmt::format("no structures within {} km of ({}) for region \"{}\"",
                                       radius_km, format_decimal(center), name));
  }
  return Region{std::move(name), center, radius_km, std::move(members)};
}

std::string format_decimal(const GeoPoint& p) {
  return fmt::format("{:.4f}, {:.4f}", p.lat, p.lon);
}

std::string format_corners(const BoundingBox& box) {
  return fmt::format("{} to {}", format_decimal(box.min_corner), format_decimal(box.max_corner));
}

}  // namespace drs::geo
