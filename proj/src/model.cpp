#include "drs/model.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace drs {
namespace {

constexpr std::array<std::string_view, 12> kMonthNames{
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

bool parse_fixed_digits(std::string_view text, int& out) {
  out = 0;
  if (text.empty()) {
    return false;
  }
  for (char c : text) {
    if (c < '0' || c > '9') {
      return false;
    }
    out = out * 10 + (c - '0');
  }
  return true;
}

void prefix_into(std::vector<FieldIssue>& out, std::string_view prefix,
                 const std::vector<FieldIssue>& inner) {
  for (const auto& issue : inner) {
    out.push_back({std::string(prefix) + "." + issue.field, issue.message});
  }
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

CalendarDate parse_iso_date(std::string_view text, std::string_view field) {
  int y = 0;
  int m = 0;
  int d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !parse_fixed_digits(text.substr(0, 4), y) || !parse_fixed_digits(text.substr(5, 2), m) ||
      !parse_fixed_digits(text.substr(8, 2), d)) {
    throw ValidationError(std::string(field),
                          fmt::format("expected a YYYY-MM-DD date, got \"{}\"", text));
  }
  CalendarDate date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    throw ValidationError(std::string(field), fmt::format("\"{}\" is not a calendar date", text));
  }
  return date;
}

std::string format_iso_date(CalendarDate date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

std::string format_long_date(CalendarDate date) {
  const auto month = static_cast<unsigned>(date.month());
  return fmt::format("{} {}, {}", kMonthNames.at(month - 1), static_cast<unsigned>(date.day()),
                     static_cast<int>(date.year()));
}

std::vector<FieldIssue> check(const GeoPoint& point) {
  std::vector<FieldIssue> issues;
  if (!std::isfinite(point.lat) || point.lat < -90.0 || point.lat > 90.0) {
    issues.push_back({"lat", fmt::format("latitude {} outside [-90, 90]", point.lat)});
  }
  if (!std::isfinite(point.lon) || point.lon < -180.0 || point.lon > 180.0) {
    issues.push_back({"lon", fmt::format("longitude {} outside [-180, 180]", point.lon)});
  }
  return issues;
}

std::vector<FieldIssue> check(const EventMetadata& event) {
  std::vector<FieldIssue> issues;
  if (blank(event.event_name)) {
    issues.push_back({"event_name", "must be non-empty"});
  }
  if (!std::isfinite(event.magnitude) || event.magnitude <= 0.0 || event.magnitude > 10.0) {
    issues.push_back({"magnitude", fmt::format("magnitude {} outside (0, 10]", event.magnitude)});
  }
  if (!event.origin_date.ok()) {
    issues.push_back({"origin_date", "not a calendar date"});
  }
  if (event.epicenter) {
    prefix_into(issues, "epicenter", check(*event.epicenter));
  }
  return issues;
}

std::vector<FieldIssue> check(const StructureMetadata& structure) {
  std::vector<FieldIssue> issues;
  if (blank(structure.structure_id)) {
    issues.push_back({"structure_id", "must be non-empty"});
  }
  prefix_into(issues, "location", check(structure.location));
  if (structure.stories < 1) {
    issues.push_back({"stories", fmt::format("must be >= 1, got {}", structure.stories)});
  }
  if (structure.footprint_area_sqft &&
      (!std::isfinite(*structure.footprint_area_sqft) || *structure.footprint_area_sqft <= 0.0)) {
    issues.push_back({"footprint_area_sqft", "must be positive"});
  }
  if (!structure.inspected_date.ok()) {
    issues.push_back({"inspected_date", "not a calendar date"});
  }
  if (structure.last_updated && !structure.last_updated->ok()) {
    issues.push_back({"last_updated", "not a calendar date"});
  }
  return issues;
}

std::vector<FieldIssue> check(const AttributeSet& attributes) {
  std::vector<FieldIssue> issues;
  if (attributes.damage_state == DamageState::undamaged) {
    if (attributes.damage_level && *attributes.damage_level != DamageLevel::undamaged) {
      issues.push_back({"damage_level",
                        fmt::format("\"{}\" contradicts damage_state \"undamaged\"",
                                    to_label(*attributes.damage_level))});
    }
    if (attributes.damage_type) {
      issues.push_back({"damage_type", "must be absent when damage_state is \"undamaged\""});
    }
  }
  if (attributes.damage_level && *attributes.damage_level != DamageLevel::undamaged &&
      attributes.damage_state && *attributes.damage_state != DamageState::damaged) {
    issues.push_back({"damage_state", "must be \"damaged\" when a damage level is reported"});
  }
  return issues;
}

std::vector<FieldIssue> check(const ImageObservation& observation) {
  std::vector<FieldIssue> issues;
  if (blank(observation.image_id)) {
    issues.push_back({"image_id", "must be non-empty"});
  }
  if (blank(observation.image_uri)) {
    issues.push_back({"image_uri", "must be non-empty"});
  }
  if (blank(observation.structure_id)) {
    issues.push_back({"structure_id", "must be non-empty"});
  }
  if (observation.scope == ObservationScope::component) {
    if (!observation.floor) {
      issues.push_back({"floor", "required for component-scope observations"});
    } else if (*observation.floor < 1) {
      issues.push_back({"floor", fmt::format("must be >= 1, got {}", *observation.floor)});
    }
  } else if (observation.floor) {
    issues.push_back({"floor", "must be absent for system-scope observations"});
  }
  if (observation.attributes) {
    prefix_into(issues, "attributes", check(*observation.attributes));
  }
  return issues;
}

std::vector<FieldIssue> check(const FloorGroup& group) {
  std::vector<FieldIssue> issues;
  if (group.floor < 1) {
    issues.push_back({"floor", fmt::format("must be >= 1, got {}", group.floor)});
  }
  for (std::size_t i = 0; i < group.observations.size(); ++i) {
    const auto& obs = group.observations[i];
    const auto path = fmt::format("observations[{}]", i);
    if (obs.scope != ObservationScope::component) {
      issues.push_back({path + ".scope", "floor groups hold component-scope observations only"});
    }
    if (obs.floor != group.floor) {
      issues.push_back({path + ".floor", fmt::format("does not match group floor {}", group.floor)});
    }
    prefix_into(issues, path, check(obs));
  }
  return issues;
}

std::vector<FieldIssue> check(const StructureDocument& document) {
  std::vector<FieldIssue> issues;
  prefix_into(issues, "event", check(document.event));
  prefix_into(issues, "metadata", check(document.metadata));
  const auto& id = document.metadata.structure_id;
  for (std::size_t i = 0; i < document.system_observations.size(); ++i) {
    const auto& obs = document.system_observations[i];
    const auto path = fmt::format("system_observations[{}]", i);
    if (obs.scope != ObservationScope::system) {
      issues.push_back({path + ".scope", "must be \"system\""});
    }
    if (obs.structure_id != id) {
      issues.push_back({path + ".structure_id", fmt::format("does not match \"{}\"", id)});
    }
    prefix_into(issues, path, check(obs));
  }
  for (std::size_t i = 0; i < document.floors.size(); ++i) {
    const auto path = fmt::format("floors[{}]", i);
    if (i > 0 && document.floors[i].floor <= document.floors[i - 1].floor) {
      issues.push_back({path + ".floor", "floors must be strictly ascending"});
    }
    for (std::size_t j = 0; j < document.floors[i].observations.size(); ++j) {
      if (document.floors[i].observations[j].structure_id != id) {
        issues.push_back({fmt::format("{}.observations[{}].structure_id", path, j),
                          fmt::format("does not match \"{}\"", id)});
      }
    }
    prefix_into(issues, path, check(document.floors[i]));
  }
  return issues;
}

std::vector<FieldIssue> check(const Region& region) {
  std::vector<FieldIssue> issues;
  prefix_into(issues, "center", check(region.center));
  if (!std::isfinite(region.radius_km) || region.radius_km < 0.0) {
    issues.push_back({"radius_km", "must be a non-negative number"});
  }
  if (region.member_ids.empty()) {
    issues.push_back({"member_ids", "must be non-empty"});
  }
  std::set<std::string> seen;
  for (const auto& id : region.member_ids) {
    if (!seen.insert(id).second) {
      issues.push_back({"member_ids", fmt::format("duplicate member \"{}\"", id)});
    }
  }
  return issues;
}

GeoPoint make_geo_point(double lat, double lon) {
  GeoPoint point{lat, lon};
  require_valid(point);
  return point;
}

std::string display_label(const ImageObservation& observation) {
  if (observation.component_label && !observation.component_label->empty()) {
    return *observation.component_label;
  }
  return observation.image_id;
}

}  // namespace drs
