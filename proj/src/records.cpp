#include "drs/records.hpp"

#include <cstdint>
#include <limits>
#include <set>
#include <string>

#include <fmt/format.h>

#include "drs/dms.hpp"

namespace drs::records {
namespace {

// Reads keys from one JSON object and remembers which were consumed so that
// leftovers can be reported as unknown. A JSON null counts as absent.
class RecordReader {
 public:
  RecordReader(const Json& j, std::string_view context) : json_(j), context_(context) {
    if (!j.is_object()) {
      throw ParseError(fmt::format("{}: expected a JSON object", context_));
    }
  }

  bool has(std::string_view key) {
    seen_.emplace(key);
    auto it = json_.find(std::string(key));
    return it != json_.end() && !it->is_null();
  }

  const Json& at(std::string_view key) { return json_.at(std::string(key)); }

  std::string required_string(std::string_view key) {
    if (!has(key)) {
      missing(key);
    }
    return as_string(key);
  }

  std::optional<std::string> optional_string(std::string_view key) {
    if (!has(key)) {
      return std::nullopt;
    }
    return as_string(key);
  }

  double required_number(std::string_view key) {
    if (!has(key)) {
      missing(key);
    }
    return as_number(key);
  }

  std::optional<double> optional_number(std::string_view key) {
    if (!has(key)) {
      return std::nullopt;
    }
    return as_number(key);
  }

  int required_int(std::string_view key) {
    if (!has(key)) {
      missing(key);
    }
    return as_int(key);
  }

  std::optional<int> optional_int(std::string_view key) {
    if (!has(key)) {
      return std::nullopt;
    }
    return as_int(key);
  }

  CalendarDate required_date(std::string_view key) {
    const auto text = required_string(key);
    return to_date(key, text);
  }

  std::optional<CalendarDate> optional_date(std::string_view key) {
    auto text = optional_string(key);
    if (!text) {
      return std::nullopt;
    }
    return to_date(key, *text);
  }

  template <typename E>
  std::optional<E> optional_enum(std::string_view key) {
    auto text = optional_string(key);
    if (!text) {
      return std::nullopt;
    }
    auto value = from_label<E>(*text);
    if (!value) {
      std::string allowed;
      for (auto name : EnumLabels<E>::names) {
        allowed += allowed.empty() ? "" : ", ";
        allowed += name;
      }
      throw ParseError(fmt::format("{}: field \"{}\": unknown label \"{}\" (allowed: {})",
                                   context_, key, *text, allowed));
    }
    return value;
  }

  template <typename E>
  E required_enum(std::string_view key) {
    if (!has(key)) {
      missing(key);
    }
    return *optional_enum<E>(key);
  }

  std::string context_for(std::string_view key) const {
    return fmt::format("{}: field \"{}\"", context_, key);
  }

  // Throws if the object carries keys nobody asked for.
  void finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (!seen_.contains(key)) {
        throw ParseError(fmt::format("{}: unknown field \"{}\"", context_, key));
      }
    }
  }

 private:
  [[noreturn]] void missing(std::string_view key) const {
    throw ParseError(fmt::format("{}: missing required field \"{}\"", context_, key));
  }

  [[noreturn]] void wrong_type(std::string_view key, std::string_view expected) const {
    throw ParseError(fmt::format("{}: field \"{}\" must be {}", context_, key, expected));
  }

  std::string as_string(std::string_view key) {
    const auto& v = at(key);
    if (!v.is_string()) {
      wrong_type(key, "a string");
    }
    return v.get<std::string>();
  }

  double as_number(std::string_view key) {
    const auto& v = at(key);
    if (!v.is_number()) {
      wrong_type(key, "a number");
    }
    return v.get<double>();
  }

  int as_int(std::string_view key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) {
      wrong_type(key, "an integer");
    }
    const auto wide = v.get<std::int64_t>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
      wrong_type(key, "an integer in range");
    }
    return static_cast<int>(wide);
  }

  CalendarDate to_date(std::string_view key, const std::string& text) const {
    try {
      return parse_iso_date(text, key);
    } catch (const ValidationError& e) {
      throw ParseError(fmt::format("{}: {}", context_, e.what()));
    }
  }

  const Json& json_;
  std::string context_;
  std::set<std::string, std::less<>> seen_;
};

template <typename E>
void put_enum(Json& j, const char* key, const std::optional<E>& value) {
  if (value) {
    j[key] = std::string(to_label(*value));
  }
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& value) {
  if (value) {
    j[key] = *value;
  }
}

}  // namespace

GeoPoint location_from_json(const Json& j, std::string_view context) {
  RecordReader r(j, context);
  GeoPoint point;
  const bool decimal = r.has("lat") || r.has("lon");
  const bool dms = r.has("lat_dms") || r.has("lon_dms");
  if (decimal == dms) {
    throw ParseError(fmt::format(
        "{}: expected either {{\"lat\", \"lon\"}} or {{\"lat_dms\", \"lon_dms\"}}", context));
  }
  if (decimal) {
    point.lat = r.required_number("lat");
    point.lon = r.required_number("lon");
  } else {
    const auto lat_text = r.required_string("lat_dms");
    const auto lon_text = r.required_string("lon_dms");
    try {
      point.lat = parse_dms(lat_text, Axis::lat);
      point.lon = parse_dms(lon_text, Axis::lon);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: {}", context, e.what()));
    }
  }
  r.finish();
  return point;
}

EventMetadata event_from_json(const Json& j, std::string_view context) {
  RecordReader r(j, context);
  EventMetadata event;
  event.event_name = r.required_string("event_name");
  event.magnitude = r.required_number("magnitude");
  event.origin_date = r.required_date("origin_date");
  event.origin_time_local = r.optional_string("origin_time_local");
  event.epicenter_description = r.optional_string("epicenter_description");
  if (r.has("epicenter")) {
    event.epicenter = location_from_json(r.at("epicenter"), r.context_for("epicenter"));
  }
  r.finish();
  return event;
}

StructureMetadata structure_from_json(const Json& j, std::string_view context) {
  RecordReader r(j, context);
  StructureMetadata s;
  s.structure_id = r.required_string("structure_id");
  s.name = r.required_string("name");
  s.address = r.required_string("address");
  if (!r.has("location")) {
    throw ParseError(fmt::format("{}: missing required field \"location\"", context));
  }
  s.location = location_from_json(r.at("location"), r.context_for("location"));
  s.structure_type = r.required_string("structure_type");
  s.stories = r.required_int("stories");
  s.construction = r.required_string("construction");
  s.occupancy = r.required_string("occupancy");
  s.footprint_area_sqft = r.optional_number("footprint_area_sqft");
  s.overall_rating = r.required_enum<OverallRating>("overall_rating");
  s.functionality = r.optional_string("functionality");
  s.inspection_team = r.required_string("inspection_team");
  s.contributor = r.required_string("contributor");
  s.inspected_date = r.required_date("inspected_date");
  s.last_updated = r.optional_date("last_updated");
  s.assessor_comments = r.optional_string("assessor_comments");
  r.finish();
  return s;
}

AttributeSet attributes_from_json(const Json& j, std::string_view context) {
  RecordReader r(j, context);
  AttributeSet a;
  a.damage_state = r.optional_enum<DamageState>("damage_state");
  a.spalling = r.optional_enum<Spalling>("spalling");
  a.material = r.optional_enum<Material>("material");
  a.collapse_mode = r.optional_enum<CollapseMode>("collapse_mode");
  a.component_type = r.optional_enum<ComponentType>("component_type");
  a.damage_level = r.optional_enum<DamageLevel>("damage_level");
  a.damage_type = r.optional_enum<DamageType>("damage_type");
  r.finish();
  return a;
}

ImageObservation observation_from_json(const Json& j, std::string_view context) {
  RecordReader r(j, context);
  ImageObservation o;
  o.image_id = r.required_string("image_id");
  o.image_uri = r.required_string("image_uri");
  o.structure_id = r.required_string("structure_id");
  o.scope = r.required_enum<ObservationScope>("scope");
  o.floor = r.optional_int("floor");
  o.component_label = r.optional_string("component_label");
  o.captured_at = r.optional_string("captured_at");
  o.note = r.optional_string("note");
  if (r.has("attributes")) {
    o.attributes = attributes_from_json(r.at("attributes"), r.context_for("attributes"));
  }
  r.finish();
  return o;
}

Json to_json(const GeoPoint& point) {
  Json j;
  j["lat"] = point.lat;
  j["lon"] = point.lon;
  return j;
}

Json to_json(const EventMetadata& event) {
  Json j;
  j["event_name"] = event.event_name;
  j["magnitude"] = event.magnitude;
  j["origin_date"] = format_iso_date(event.origin_date);
  put_optional(j, "origin_time_local", event.origin_time_local);
  put_optional(j, "epicenter_description", event.epicenter_description);
  if (event.epicenter) {
    j["epicenter"] = to_json(*event.epicenter);
  }
  return j;
}

Json to_json(const StructureMetadata& s) {
  Json j;
  j["structure_id"] = s.structure_id;
  j["name"] = s.name;
  j["address"] = s.address;
  j["location"] = to_json(s.location);
  j["structure_type"] = s.structure_type;
  j["stories"] = s.stories;
  j["construction"] = s.construction;
  j["occupancy"] = s.occupancy;
  put_optional(j, "footprint_area_sqft", s.footprint_area_sqft);
  j["overall_rating"] = std::string(to_label(s.overall_rating));
  put_optional(j, "functionality", s.functionality);
  j["inspection_team"] = s.inspection_team;
  j["contributor"] = s.contributor;
  j["inspected_date"] = format_iso_date(s.inspected_date);
  if (s.last_updated) {
    j["last_updated"] = format_iso_date(*s.last_updated);
  }
  put_optional(j, "assessor_comments", s.assessor_comments);
  return j;
}

Json to_json(const AttributeSet& a) {
  Json j = Json::object();
  put_enum(j, "damage_state", a.damage_state);
  put_enum(j, "spalling", a.spalling);
  put_enum(j, "material", a.material);
  put_enum(j, "collapse_mode", a.collapse_mode);
  put_enum(j, "component_type", a.component_type);
  put_enum(j, "damage_level", a.damage_level);
  put_enum(j, "damage_type", a.damage_type);
  return j;
}

Json to_json(const ImageObservation& o) {
  Json j;
  j["image_id"] = o.image_id;
  j["image_uri"] = o.image_uri;
  j["structure_id"] = o.structure_id;
  j["scope"] = std::string(to_label(o.scope));
  put_optional(j, "floor", o.floor);
  put_optional(j, "component_label", o.component_label);
  put_optional(j, "captured_at", o.captured_at);
  put_optional(j, "note", o.note);
  if (o.attributes) {
    j["attributes"] = to_json(*o.attributes);
  }
  return j;
}

}  // namespace drs::records
