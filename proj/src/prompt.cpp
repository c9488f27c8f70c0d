#include "drs/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "drs/dms.hpp"
#include "drs/extract.hpp"
#include "drs/geo.hpp"
#include "drs/text.hpp"
#include "drs_templates.hpp"

namespace drs::prompt {
namespace {

constexpr std::string_view kEventHeader = "[Event]";
constexpr std::string_view kMetadataHeader = "[Structure metadata]";
constexpr std::string_view kSystemHeader = "[System-level observations]";
constexpr std::string_view kRegionHeader = "[Region]";
constexpr std::string_view kFloorHeaderPrefix = "[Floor ";
constexpr std::string_view kStructureHeaderPrefix = "[Structure ";
constexpr std::string_view kEndStructurePrefix = "[End of structure ";
constexpr std::string_view kTruncationPrefix = "[Truncated";
constexpr std::string_view kNotePrefix = "  Note: ";
constexpr std::string_view kSystemLinePrefix = "System, ";
constexpr std::string_view kSystemAggregatePrefix = "System-level: ";
constexpr std::string_view kNoObservations = "No image observations recorded.";
constexpr std::string_view kNotRecorded = "not recorded";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

template <typename T>
std::string or_not_recorded(const std::optional<T>& value) {
  return value ? text::single_line(*value) : std::string(kNotRecorded);
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

// "[Floor 3]" -> 3
std::optional<int> floor_header(std::string_view line) {
  if (!line.starts_with(kFloorHeaderPrefix) || !line.ends_with("]")) {
    return std::nullopt;
  }
  return parse_int(line.substr(kFloorHeaderPrefix.size(),
                               line.size() - kFloorHeaderPrefix.size() - 1));
}

bool is_observation_header(std::string_view line) {
  return line == kSystemHeader || floor_header(line).has_value();
}

bool is_section_header(std::string_view line) {
  return line.size() >= 2 && line.front() == '[' && line.back() == ']';
}

void append_observation(std::string& out, std::string_view prefix, const ImageObservation& o) {
  const auto attributes = o.attributes ? render_attribute_text(*o.attributes)
                                       : render_attribute_text(AttributeSet{});
  out += fmt::format("{}{}: {}\n", prefix, text::single_line(display_label(o)), attributes);
  if (o.note && !text::trim(*o.note).empty()) {
    out += fmt::format("{}{}\n", kNotePrefix, text::single_line(text::trim(*o.note)));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(fmt::format("cannot open template \"{}\"", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

PromptBundle make_bundle(std::string user_message, const Options& options) {
  PromptBundle bundle{build_system_message(options), std::move(user_message), options.temperature,
                      options.max_output_tokens};
  require_valid(bundle);
  return bundle;
}

// Splits "Label: value"; nullopt when there is no ": ".
std::optional<std::pair<std::string, std::string>> split_field(std::string_view line) {
  const auto colon = line.find(": ");
  if (colon == std::string_view::npos) {
    return std::nullopt;
  }
  return std::pair{std::string(line.substr(0, colon)), std::string(line.substr(colon + 2))};
}

// "Floor 2: 5 observations, worst damage level heavy" (or the System-level
// variant). `rest` starts after the "Floor 2: " / "System-level: " prefix.
std::optional<CondensedSection> parse_aggregate(std::optional<int> floor, std::string_view rest) {
  const auto space = rest.find(' ');
  if (space == std::string_view::npos) {
    return std::nullopt;
  }
  auto count = parse_int(rest.substr(0, space));
  constexpr std::string_view kMiddle = " observations, worst damage level ";
  if (!count || rest.substr(space, kMiddle.size()) != kMiddle) {
    return std::nullopt;
  }
  const auto level_text = rest.substr(space + kMiddle.size());
  CondensedSection section{floor, *count, std::nullopt};
  if (level_text != kNotRecorded) {
    section.worst_level = from_label<DamageLevel>(level_text);
    if (!section.worst_level) {
      return std::nullopt;
    }
  }
  return section;
}

StructurePayload parse_structure_payload(const std::vector<std::string_view>& lines,
                                         std::size_t first) {
  enum class Section { none, event, metadata, observations, other };
  StructurePayload payload;
  Section section = Section::none;
  std::optional<int> current_floor;

  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (text::trim(line).empty()) {
      continue;
    }
    if (line.starts_with(kTruncationPrefix)) {
      payload.truncated = true;
      continue;
    }
    if (line == kEventHeader) {
      section = Section::event;
      continue;
    }
    if (line == kMetadataHeader) {
      section = Section::metadata;
      continue;
    }
    if (line == kSystemHeader) {
      section = Section::observations;
      current_floor.reset();
      continue;
    }
    if (auto floor = floor_header(line)) {
      section = Section::observations;
      current_floor = floor;
      continue;
    }
    if (line == kNoObservations) {
      section = Section::other;
      continue;
    }

    switch (section) {
      case Section::event:
      case Section::metadata: {
        auto field = split_field(line);
        if (!field) {
          throw PayloadError(fmt::format("unrecognized metadata line \"{}\"", line));
        }
        (section == Section::event ? payload.event : payload.metadata).push_back(*field);
        break;
      }
      case Section::observations: {
        if (line.starts_with(kNotePrefix)) {
          if (payload.observations.empty()) {
            throw PayloadError("note without an observation");
          }
          payload.observations.back().note = std::string(line.substr(kNotePrefix.size()));
          break;
        }
        std::string_view rest;
        std::string prefix = current_floor ? fmt::format("Floor {}", *current_floor) : "";
        if (!current_floor && line.starts_with(kSystemAggregatePrefix)) {
          auto agg = parse_aggregate(std::nullopt, line.substr(kSystemAggregatePrefix.size()));
          if (!agg) {
            throw PayloadError(fmt::format("unrecognized aggregate line \"{}\"", line));
          }
          payload.condensed.push_back(*agg);
          break;
        }
        if (current_floor && line.starts_with(prefix + ": ")) {
          auto agg = parse_aggregate(current_floor, line.substr(prefix.size() + 2));
          if (!agg) {
            throw PayloadError(fmt::format("unrecognized aggregate line \"{}\"", line));
          }
          payload.condensed.push_back(*agg);
          break;
        }
        if (current_floor && line.starts_with(prefix + ", ")) {
          rest = line.substr(prefix.size() + 2);
        } else if (!current_floor && line.starts_with(kSystemLinePrefix)) {
          rest = line.substr(kSystemLinePrefix.size());
        } else {
          throw PayloadError(fmt::format("unrecognized observation line \"{}\"", line));
        }
        const auto colon = rest.rfind(": ");
        if (colon == std::string_view::npos) {
          throw PayloadError(fmt::format("observation line without attributes \"{}\"", line));
        }
        auto attributes = parse_attribute_text(rest.substr(colon + 2));
        if (!attributes) {
          throw PayloadError(fmt::format("unrecognized attribute text in \"{}\"", line));
        }
        payload.observations.push_back(
            {current_floor, std::string(rest.substr(0, colon)), *attributes, std::nullopt});
        break;
      }
      case Section::none:
      case Section::other:
        throw PayloadError(fmt::format("unexpected line \"{}\"", line));
    }
  }
  if (payload.event.empty() || payload.metadata.empty()) {
    throw PayloadError("structure payload lacks event or metadata fields");
  }
  return payload;
}

RegionPayload parse_region_payload(const std::vector<std::string_view>& lines, std::size_t first) {
  RegionPayload payload;
  std::size_t i = first + 1;
  for (; i < lines.size() && !lines[i].starts_with(kStructureHeaderPrefix); ++i) {
    if (text::trim(lines[i]).empty() || lines[i].starts_with(kTruncationPrefix)) {
      continue;
    }
    auto field = split_field(lines[i]);
    if (!field) {
      throw PayloadError(fmt::format("unrecognized region line \"{}\"", lines[i]));
    }
    payload.region.push_back(*field);
  }

  while (i < lines.size()) {
    const auto header = lines[i];
    if (text::trim(header).empty() || header.starts_with(kTruncationPrefix)) {
      ++i;
      continue;
    }
    if (!header.starts_with(kStructureHeaderPrefix) || !header.ends_with("]")) {
      throw PayloadError(fmt::format("expected a structure header, got \"{}\"", header));
    }
    // "[Structure 1 of 3: Name | id]"
    const auto colon = header.find(": ");
    const auto bar = header.rfind(" | ");
    if (colon == std::string_view::npos || bar == std::string_view::npos || bar < colon) {
      throw PayloadError(fmt::format("malformed structure header \"{}\"", header));
    }
    const auto ordinal = header.substr(kStructureHeaderPrefix.size(),
                                       header.find(' ', kStructureHeaderPrefix.size()) -
                                           kStructureHeaderPrefix.size());
    RegionMember member;
    member.name = std::string(header.substr(colon + 2, bar - colon - 2));
    member.structure_id = std::string(header.substr(bar + 3, header.size() - bar - 4));
    const auto end_marker = fmt::format("{}{}]", kEndStructurePrefix, ordinal);

    std::string report;
    ++i;
    for (; i < lines.size() && lines[i] != end_marker; ++i) {
      report += lines[i];
      report += '\n';
    }
    if (i == lines.size()) {
      throw PayloadError(fmt::format("missing \"{}\"", end_marker));
    }
    ++i;
    member.report = std::string(text::trim(report));
    payload.members.push_back(std::move(member));
  }
  if (payload.members.empty()) {
    throw PayloadError("region payload has no structure reports");
  }
  return payload;
}

}  // namespace

std::vector<FieldIssue> check(const PromptBundle& bundle) {
  std::vector<FieldIssue> issues;
  for (auto fragment : {kTaskFragment, kTermsFragment, kRulesFragment}) {
    const auto n = count_occurrences(bundle.system_message, fragment);
    if (n != 1) {
      issues.push_back({"system_message", fmt::format("must contain \"{}\" exactly once (found {})",
                                                      fragment.substr(0, 40), n)});
    }
  }
  if (!(bundle.temperature >= 0.0 && bundle.temperature <= 2.0)) {
    issues.push_back({"temperature", "must lie in [0, 2]"});
  }
  if (bundle.max_output_tokens <= 0) {
    issues.push_back({"max_output_tokens", "must be positive"});
  }
  if (text::trim(bundle.user_message).empty()) {
    issues.push_back({"user_message", "must be non-empty"});
  }
  return issues;
}

const Templates& Templates::builtin() {
  static const Templates templates{std::string(generated::kSystemMessage),
                                   std::string(generated::kStructureGoal),
                                   std::string(generated::kRegionGoal)};
  return templates;
}

Templates Templates::from_directory(const std::filesystem::path& dir) {
  return Templates{read_file(dir / "system_message.txt"), read_file(dir / "structure_goal.txt"),
                   read_file(dir / "region_goal.txt")};
}

std::string build_system_message(const Options& options) {
  return std::string(
      text::trim(text::render_template(options.resolved_templates().system_message, {})));
}

std::string serialize_document(const StructureDocument& doc) {
  const auto& e = doc.event;
  const auto& m = doc.metadata;
  const auto magnitude = text::format_magnitude(e.magnitude);
  std::string out;

  out += fmt::format("{}\n", kEventHeader);
  out += fmt::format("Event name: {}\n", text::single_line(e.event_name));
  out += fmt::format("Magnitude: {}\n", magnitude);
  out += fmt::format("Origin date: {}\n", format_long_date(e.origin_date));
  out += fmt::format("Origin time (local): {}\n", or_not_recorded(e.origin_time_local));
  std::string epicenter = or_not_recorded(e.epicenter_description);
  if (e.epicenter) {
    epicenter += fmt::format(" ({})", geo::format_decimal(*e.epicenter));
  }
  out += fmt::format("Epicenter: {}\n", epicenter);
  out += fmt::format("Event summary: The event occurred on {}{} with a magnitude of {}.\n",
                     format_long_date(e.origin_date),
                     e.origin_time_local
                         ? fmt::format(" at {} local time", text::single_line(*e.origin_time_local))
                         : std::string(),
                     magnitude);

  out += fmt::format("\n{}\n", kMetadataHeader);
  out += fmt::format("Structure ID: {}\n", text::single_line(m.structure_id));
  out += fmt::format("Name: {}\n", text::single_line(m.name));
  out += fmt::format("Address: {}\n", text::single_line(m.address));
  out += fmt::format("Latitude: {} ({:.6f})\n", format_dms(m.location.lat, Axis::lat),
                     m.location.lat);
  out += fmt::format("Longitude: {} ({:.6f})\n", format_dms(m.location.lon, Axis::lon),
                     m.location.lon);
  out += fmt::format("Structure type: {}\n", text::single_line(m.structure_type));
  out += fmt::format("Stories: {}\n", m.stories);
  out += fmt::format("Construction: {}\n", text::single_line(m.construction));
  out += fmt::format("Occupancy: {}\n", text::single_line(m.occupancy));
  out += fmt::format("Footprint area (sq ft): {}\n",
                     m.footprint_area_sqft ? text::format_number(*m.footprint_area_sqft)
                                           : std::string(kNotRecorded));
  out += fmt::format("Overall rating: {}\n", text::capitalize(to_label(m.overall_rating)));
  out += fmt::format("Functionality: {}\n", or_not_recorded(m.functionality));
  out += fmt::format("Inspection team: {}\n", text::single_line(m.inspection_team));
  out += fmt::format("Contributor: {}\n", text::single_line(m.contributor));
  out += fmt::format("Inspected date: {}\n", format_long_date(m.inspected_date));
  out += fmt::format("Last updated: {}\n",
                     m.last_updated ? format_long_date(*m.last_updated) : std::string(kNotRecorded));
  out += fmt::format("Assessor comments: {}\n", or_not_recorded(m.assessor_comments));

  if (doc.system_observations.empty() && doc.floors.empty()) {
    out += fmt::format("\n{}\n", kNoObservations);
    return out;
  }
  if (!doc.system_observations.empty()) {
    out += fmt::format("\n{}\n", kSystemHeader);
    for (const auto& o : doc.system_observations) {
      append_observation(out, kSystemLinePrefix, o);
    }
  }
  for (const auto& group : doc.floors) {
    out += fmt::format("\n{}{}]\n", kFloorHeaderPrefix, group.floor);
    const auto prefix = fmt::format("Floor {}, ", group.floor);
    for (const auto& o : group.observations) {
      append_observation(out, prefix, o);
    }
  }
  return out;
}

PromptBundle build_structure_prompt(const StructureDocument& doc, const Options& options) {
  const auto goal = text::render_template(
      options.resolved_templates().structure_goal,
      {{"structure_name", text::single_line(doc.metadata.name)},
       {"structure_id", text::single_line(doc.metadata.structure_id)}});
  auto user = fmt::format("{}\n\n{}", text::trim(goal), serialize_document(doc));
  return make_bundle(truncate_to_budget(user, options.budget_tokens), options);
}

PromptBundle build_region_prompt(const Region& region,
                                 std::span<const StructureMetadata> structures,
                                 std::span<const std::string> reports, const Options& options) {
  if (reports.size() != region.member_ids.size()) {
    throw ValidationError("individual_reports",
                          fmt::format("{} report(s) for {} region member(s)", reports.size(),
                                      region.member_ids.size()));
  }
  require_valid(region);

  std::vector<const StructureMetadata*> members;
  std::vector<GeoPoint> points;
  for (const auto& id : region.member_ids) {
    auto it = std::find_if(structures.begin(), structures.end(),
                           [&](const auto& s) { return s.structure_id == id; });
    if (it == structures.end()) {
      throw ValidationError("member_ids", fmt::format("no metadata for member \"{}\"", id));
    }
    members.push_back(&*it);
    points.push_back(it->location);
  }
  const auto box = geo::bounding_box(points);

  const auto goal = text::render_template(
      options.resolved_templates().region_goal,
      {{"region_name", text::single_line(region.region_name)},
       {"structure_count", std::to_string(members.size())},
       {"radius_km", text::format_number(region.radius_km)},
       {"center", fmt::format("({})", geo::format_decimal(region.center))}});

  std::string user = fmt::format("{}\n\n{}\n", text::trim(goal), kRegionHeader);
  user += fmt::format("Region name: {}\n", text::single_line(region.region_name));
  user += fmt::format("Center: {}\n", geo::format_decimal(region.center));
  user += fmt::format("Radius (km): {}\n", text::format_number(region.radius_km));
  user += fmt::format("Structures inspected: {}\n", members.size());
  user += fmt::format("Coverage: The region encompasses the coordinates {}.\n",
                      geo::format_corners(box));
  for (std::size_t i = 0; i < members.size(); ++i) {
    user += fmt::format("\n{}{} of {}: {} | {}]\n", kStructureHeaderPrefix, i + 1, members.size(),
                        text::single_line(members[i]->name),
                        text::single_line(members[i]->structure_id));
    user += text::trim(reports[i]);
    user += fmt::format("\n{}{}]\n", kEndStructurePrefix, i + 1);
  }
  return make_bundle(truncate_to_budget(user, options.budget_tokens), options);
}

std::string truncate_to_budget(std::string_view input, int budget_tokens) {
  if (budget_tokens < kMinBudgetTokens) {
    throw BudgetError(fmt::format("token budget {} is below the minimum of {}", budget_tokens,
                                  kMinBudgetTokens));
  }
  const auto budget = static_cast<std::size_t>(budget_tokens);
  if (text::estimate_tokens(input) <= budget) {
    return std::string(input);
  }

  const auto lines = text::split_lines(input);
  auto join = [](const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
      out += p;
      out += '\n';
    }
    return out;
  };
  auto with_notice = [&](std::vector<std::string> parts, std::string_view what) {
    parts.push_back("");
    parts.push_back(fmt::format("{} to fit a budget of {} tokens: {}.]", kTruncationPrefix,
                                budget_tokens, what));
    return join(parts);
  };

  // Pass 1: drop notes inside observation sections.
  std::vector<std::string> without_notes;
  bool in_observations = false;
  bool dropped_note = false;
  for (auto line : lines) {
    if (is_section_header(line)) {
      in_observations = is_observation_header(line);
    }
    if (in_observations && line.starts_with(kNotePrefix)) {
      dropped_note = true;
      continue;
    }
    without_notes.emplace_back(line);
  }
  if (dropped_note) {
    auto candidate = with_notice(without_notes, "observation notes removed");
    if (text::estimate_tokens(candidate) <= budget) {
      return candidate;
    }
  }

  // Pass 2: one aggregate line per observation section.
  std::vector<std::string> condensed;
  std::size_t head_end = without_notes.size();  // first line after the metadata block
  bool condensed_any = false;
  for (std::size_t i = 0; i < without_notes.size();) {
    const auto& line = without_notes[i];
    if (!is_observation_header(line)) {
      if (line == kNoObservations) {
        head_end = std::min(head_end, condensed.size());
      }
      condensed.push_back(line);
      ++i;
      continue;
    }
    head_end = std::min(head_end, condensed.size());
    const auto floor = floor_header(line);
    condensed.push_back(line);
    int count = 0;
    std::optional<DamageLevel> worst;
    std::size_t j = i + 1;
    for (; j < without_notes.size() && !is_section_header(without_notes[j]); ++j) {
      const auto& body = without_notes[j];
      const auto colon = body.rfind(": ");
      if (text::trim(body).empty() || colon == std::string::npos) {
        continue;
      }
      ++count;
      if (auto attrs = parse_attribute_text(std::string_view(body).substr(colon + 2))) {
        if (attrs->damage_level && (!worst || *attrs->damage_level > *worst)) {
          worst = attrs->damage_level;
        }
      }
    }
    const auto level = worst ? std::string(to_label(*worst)) : std::string(kNotRecorded);
    if (floor) {
      condensed.push_back(fmt::format("Floor {}: {} observations, worst damage level {}", *floor,
                                      count, level));
    } else {
      condensed.push_back(
          fmt::format("{}{} observations, worst damage level {}", kSystemAggregatePrefix, count,
                      level));
    }
    condensed.push_back("");
    condensed_any = true;
    i = j;
  }
  if (condensed_any) {
    while (condensed.size() > 1 && condensed.back().empty()) {
      condensed.pop_back();
    }
    auto candidate = with_notice(
        condensed, dropped_note ? "observation notes removed and observation sections condensed"
                                : "observation sections condensed");
    if (text::estimate_tokens(candidate) <= budget) {
      return candidate;
    }
  }

  std::vector<std::string> head(condensed.begin(),
                                condensed.begin() + static_cast<std::ptrdiff_t>(
                                                        std::min(head_end, condensed.size())));
  if (head_end < condensed.size() && text::estimate_tokens(join(head)) > budget) {
    throw BudgetError(fmt::format(
        "token budget {} is too small to hold the event and metadata sections", budget_tokens));
  }
  throw BudgetError(fmt::format("text needs about {} tokens and cannot be reduced below {}",
                                text::estimate_tokens(input), budget_tokens));
}

std::optional<std::string> StructurePayload::find(const Fields& fields, std::string_view label) {
  for (const auto& [k, v] : fields) {
    if (k == label) {
      return v;
    }
  }
  return std::nullopt;
}

std::variant<StructurePayload, RegionPayload> parse_user_message(std::string_view user_message) {
  const auto lines = text::split_lines(user_message);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i] == kEventHeader) {
      return parse_structure_payload(lines, i);
    }
    if (lines[i] == kRegionHeader) {
      return parse_region_payload(lines, i);
    }
  }
  throw PayloadError("message is not a structure or region payload produced by this pipeline");
}

}  // namespace drs::prompt
