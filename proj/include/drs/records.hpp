#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "drs/model.hpp"

// Strict JSON record (de)serialization for the domain types. Keys match the
// type field names in snake_case; unknown keys and unknown enum labels are
// rejected with a ParseError that names the record context and the key.
namespace drs::records {

using Json = nlohmann::ordered_json;

// `context` prefixes error messages, e.g. "structures.jsonl:3".
EventMetadata event_from_json(const Json& j, std::string_view context);
StructureMetadata structure_from_json(const Json& j, std::string_view context);
ImageObservation observation_from_json(const Json& j, std::string_view context);
AttributeSet attributes_from_json(const Json& j, std::string_view context);
// Accepts {"lat": number, "lon": number} or {"lat_dms": text, "lon_dms": text}.
GeoPoint location_from_json(const Json& j, std::string_view context);

// Writers emit keys in declaration order and omit absent optionals, so output
// is byte-stable for equal values.
Json to_json(const GeoPoint& point);
Json to_json(const EventMetadata& event);
Json to_json(const StructureMetadata& structure);
Json to_json(const ImageObservation& observation);
Json to_json(const AttributeSet& attributes);

}  // namespace drs::records
