#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drs/error.hpp"

namespace drs {

// ---------------------------------------------------------------------------
// Enumerations
//
// All vocabularies are closed. Each enum has an EnumLabels specialization
// holding the wire label of every enumerator, indexed by its underlying value.
// ---------------------------------------------------------------------------

enum class DamageState { undamaged, damaged };
enum class Spalling { no_spalling, spalling };
enum class Material { concrete, steel, masonry, other };
enum class CollapseMode { non_collapse, partial_collapse, global_collapse };
enum class ComponentType { beam, column, wall, joint, other };
// Ordered by severity: undamaged < minor < moderate < heavy.
enum class DamageLevel { undamaged, minor, moderate, heavy };
enum class DamageType { flexural, shear, combined, other };
enum class OverallRating { none, minor, moderate, severe };
enum class ObservationScope { system, component };

template <typename E>
struct EnumLabels;

template <>
struct EnumLabels<DamageState> {
  static constexpr std::array<std::string_view, 2> names{"undamaged", "damaged"};
};
template <>
struct EnumLabels<Spalling> {
  static constexpr std::array<std::string_view, 2> names{"no_spalling", "spalling"};
};
template <>
struct EnumLabels<Material> {
  static constexpr std::array<std::string_view, 4> names{"concrete", "steel", "masonry", "other"};
};
template <>
struct EnumLabels<CollapseMode> {
  static constexpr std::array<std::string_view, 3> names{"non_collapse", "partial_collapse",
                                                         "global_collapse"};
};
template <>
struct EnumLabels<ComponentType> {
  static constexpr std::array<std::string_view, 5> names{"beam", "column", "wall", "joint", "other"};
};
template <>
struct EnumLabels<DamageLevel> {
  static constexpr std::array<std::string_view, 4> names{"undamaged", "minor", "moderate", "heavy"};
};
template <>
struct EnumLabels<DamageType> {
  static constexpr std::array<std::string_view, 4> names{"flexural", "shear", "combined", "other"};
};
template <>
struct EnumLabels<OverallRating> {
  static constexpr std::array<std::string_view, 4> names{"none", "minor", "moderate", "severe"};
};
template <>
struct EnumLabels<ObservationScope> {
  static constexpr std::array<std::string_view, 2> names{"system", "component"};
};

template <typename E>
constexpr std::size_t enum_size() {
  return EnumLabels<E>::names.size();
}

template <typename E>
constexpr std::string_view to_label(E value) {
  return EnumLabels<E>::names[static_cast<std::size_t>(value)];
}

template <typename E>
constexpr std::optional<E> from_label(std::string_view label) {
  const auto& names = EnumLabels<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == label) {
      return static_cast<E>(i);
    }
  }
  return std::nullopt;
}

template <typename E>
constexpr std::array<E, enum_size<E>()> all_values() {
  std::array<E, enum_size<E>()> values{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<E>(i);
  }
  return values;
}

// ---------------------------------------------------------------------------
// Calendar dates
// ---------------------------------------------------------------------------

using CalendarDate = std::chrono::year_month_day;

// Parses "YYYY-MM-DD". Throws ValidationError naming `field` on failure.
CalendarDate parse_iso_date(std::string_view text, std::string_view field = "date");
std::string format_iso_date(CalendarDate date);
// "January 11, 2020"
std::string format_long_date(CalendarDate date);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Decimal degrees. lat in [-90, 90], lon in [-180, 180].
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

struct EventMetadata {
  std::string event_name;
  double magnitude = 0.0;  // moment magnitude, (0, 10]
  CalendarDate origin_date{};
  std::optional<std::string> origin_time_local;
  std::optional<std::string> epicenter_description;
  std::optional<GeoPoint> epicenter;

  bool operator==(const EventMetadata&) const = default;
};

struct StructureMetadata {
  std::string structure_id;
  std::string name;
  std::string address;
  GeoPoint location;
  std::string structure_type;
  int stories = 1;
  std::string construction;
  std::string occupancy;
  std::optional<double> footprint_area_sqft;
  OverallRating overall_rating = OverallRating::none;
  std::optional<std::string> functionality;
  std::string inspection_team;
  std::string contributor;
  CalendarDate inspected_date{};
  std::optional<CalendarDate> last_updated;
  std::optional<std::string> assessor_comments;

  bool operator==(const StructureMetadata&) const = default;
};

// The seven structural attributes extracted from one image. Absent means
// "not extracted"; there is no unknown label.
struct AttributeSet {
  std::optional<DamageState> damage_state;
  std::optional<Spalling> spalling;
  std::optional<Material> material;
  std::optional<CollapseMode> collapse_mode;
  std::optional<ComponentType> component_type;
  std::optional<DamageLevel> damage_level;
  std::optional<DamageType> damage_type;

  bool empty() const {
    return !damage_state && !spalling && !material && !collapse_mode && !component_type &&
           !damage_level && !damage_type;
  }

  bool operator==(const AttributeSet&) const = default;
};

struct ImageObservation {
  std::string image_id;
  std::string image_uri;
  std::string structure_id;
  ObservationScope scope = ObservationScope::system;
  std::optional<int> floor;  // 1 = first story; required for component scope
  std::optional<std::string> component_label;
  std::optional<std::string> captured_at;  // ISO 8601 text, kept verbatim
  std::optional<std::string> note;
  std::optional<AttributeSet> attributes;

  bool operator==(const ImageObservation&) const = default;
};

struct FloorGroup {
  int floor = 1;
  std::vector<ImageObservation> observations;

  bool operator==(const FloorGroup&) const = default;
};

// Structure metadata merged with its floor-grouped image observations.
struct StructureDocument {
  EventMetadata event;
  StructureMetadata metadata;
  std::vector<ImageObservation> system_observations;
  std::vector<FloorGroup> floors;  // ascending, unique floor indices

  bool operator==(const StructureDocument&) const = default;
};

struct Region {
  std::string region_name;
  GeoPoint center;
  double radius_km = 0.0;
  std::vector<std::string> member_ids;

  bool operator==(const Region&) const = default;
};

// ---------------------------------------------------------------------------
// Invariant checks
//
// check() returns every violation; an empty result means the value is valid.
// Field paths are relative to the value being checked.
// ---------------------------------------------------------------------------

struct FieldIssue {
  std::string field;
  std::string message;

  bool operator==(const FieldIssue&) const = default;
};

std::vector<FieldIssue> check(const GeoPoint& point);
std::vector<FieldIssue> check(const EventMetadata& event);
std::vector<FieldIssue> check(const StructureMetadata& structure);
std::vector<FieldIssue> check(const AttributeSet& attributes);
std::vector<FieldIssue> check(const ImageObservation& observation);
std::vector<FieldIssue> check(const FloorGroup& group);
std::vector<FieldIssue> check(const StructureDocument& document);
std::vector<FieldIssue> check(const Region& region);

// Throws ValidationError for the first violation found.
template <typename T>
const T& require_valid(const T& value) {
  auto issues = check(value);
  if (!issues.empty()) {
    throw ValidationError(issues.front().field, issues.front().message);
  }
  return value;
}

// Validating constructors.
GeoPoint make_geo_point(double lat, double lon);

// Display name for observations: the component label, else the image id.
std::string display_label(const ImageObservation& observation);

}  // namespace drs
