#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "drs/extract.hpp"
#include "drs/llm.hpp"
#include "drs/text.hpp"

namespace drs::llm {
namespace {

using prompt::CondensedSection;
using prompt::Fields;
using prompt::ObservationLine;
using prompt::RegionPayload;
using prompt::StructurePayload;

constexpr std::string_view kAttributeLinePrefix = "Observed attribute values: ";
constexpr std::string_view kRatingPhrase = "overall rating of ";

std::string field(const Fields& fields, std::string_view label) {
  return StructurePayload::find(fields, label).value_or("not recorded");
}

bool recorded(const Fields& fields, std::string_view label) {
  auto value = StructurePayload::find(fields, label);
  return value && *value != "not recorded";
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    out += out.empty() ? "" : sep;
    out += p;
  }
  return out;
}

// "a, b and c"
std::string join_list(const std::vector<std::string>& parts) {
  if (parts.size() <= 1) {
    return join(parts, "");
  }
  std::vector<std::string> head(parts.begin(), parts.end() - 1);
  return join(head, ", ") + " and " + parts.back();
}

constexpr int kUnclassified = 99;

int component_code(const AttributeSet& a) {
  return a.component_type ? static_cast<int>(*a.component_type) : kUnclassified;
}

// `code` is a ComponentType value or kUnclassified.
std::string component_noun(int code, int count) {
  const bool plural = count != 1;
  if (code == kUnclassified) {
    return plural ? "unclassified components" : "unclassified component";
  }
  const auto type = static_cast<ComponentType>(code);
  if (type == ComponentType::other) {
    return plural ? "other components" : "other component";
  }
  return std::string(to_label(type)) + (plural ? "s" : "");
}

std::string rating_recommendation(std::string_view rating) {
  if (rating == "Severe") {
    return "Further actions and detailed evaluation are recommended.";
  }
  if (rating == "Moderate") {
    return "A detailed engineering evaluation is recommended before reoccupancy.";
  }
  if (rating == "Minor") {
    return "A routine follow-up inspection is recommended.";
  }
  return "The field data do not indicate a need for further action.";
}

int rating_rank(std::string_view rating) {
  if (rating == "Severe") return 3;
  if (rating == "Moderate") return 2;
  if (rating == "Minor") return 1;
  if (rating == "None") return 0;
  return -1;
}

// Distinct attribute words across observations, in canonical attribute order.
std::vector<std::string> attribute_vocabulary(const std::vector<ObservationLine>& observations) {
  std::set<Material> materials;
  std::set<ComponentType> components;
  std::set<DamageState> states;
  std::set<DamageLevel> levels;
  std::set<Spalling> spalling;
  std::set<DamageType> types;
  std::set<CollapseMode> collapse;
  for (const auto& o : observations) {
    const auto& a = o.attributes;
    if (a.material) materials.insert(*a.material);
    if (a.component_type) components.insert(*a.component_type);
    if (a.damage_state) states.insert(*a.damage_state);
    if (a.damage_level) levels.insert(*a.damage_level);
    if (a.spalling) spalling.insert(*a.spalling);
    if (a.damage_type) types.insert(*a.damage_type);
    if (a.collapse_mode) collapse.insert(*a.collapse_mode);
  }
  std::vector<std::string> words;
  auto add = [&](auto member, auto value) {
    AttributeSet single;
    single.*member = value;
    words.push_back(render_attribute_text(single));
  };
  for (auto v : materials) add(&AttributeSet::material, v);
  for (auto v : components) add(&AttributeSet::component_type, v);
  for (auto v : states) add(&AttributeSet::damage_state, v);
  for (auto v : levels) add(&AttributeSet::damage_level, v);
  for (auto v : spalling) add(&AttributeSet::spalling, v);
  for (auto v : types) add(&AttributeSet::damage_type, v);
  for (auto v : collapse) add(&AttributeSet::collapse_mode, v);
  return words;
}

// Component counts on one floor, e.g. "4 columns with heavy damage".
std::vector<std::string> damage_breakdown(const std::vector<const ObservationLine*>& lines) {
  // key: (component code, -damage class); class is the DamageLevel value,
  // -1 when no level was recorded. Heaviest damage sorts first.
  std::map<std::pair<int, int>, int> counts;
  for (const auto* o : lines) {
    const auto& a = o->attributes;
    int cls = -1;
    if (a.damage_level) {
      cls = static_cast<int>(*a.damage_level);
    } else if (a.damage_state == DamageState::undamaged) {
      cls = 0;
    }
    ++counts[{component_code(a), -cls}];
  }
  std::vector<std::string> parts;
  for (const auto& [key, n] : counts) {
    const int comp = key.first;
    const int cls = -key.second;
    if (cls > 0) {
      parts.push_back(fmt::format("{} {} with {} damage", n, component_noun(comp, n),
                                  to_label(static_cast<DamageLevel>(cls))));
    } else if (cls == 0) {
      parts.push_back(fmt::format("{} undamaged {}", n, component_noun(comp, n)));
    } else {
      parts.push_back(
          fmt::format("{} {} without a recorded damage level", n, component_noun(comp, n)));
    }
  }
  return parts;
}

std::string notes_sentence(const std::vector<const ObservationLine*>& lines) {
  std::string out;
  for (const auto* o : lines) {
    if (o->note) {
      out += fmt::format(" Field note on {}: {}", o->label, *o->note);
      if (!out.ends_with('.')) {
        out += '.';
      }
    }
  }
  return out;
}

std::string floor_sentence(int floor, const std::vector<const ObservationLine*>& lines) {
  std::string out = fmt::format("Floor {}: {} component observation{} ({}).", floor, lines.size(),
                                lines.size() == 1 ? "" : "s", join_list(damage_breakdown(lines)));

  int spalled = 0;
  int not_spalled = 0;
  std::map<DamageType, int> types;
  std::set<Material> materials;
  std::vector<std::string> labels;
  for (const auto* o : lines) {
    const auto& a = o->attributes;
    if (a.spalling == Spalling::spalling) ++spalled;
    if (a.spalling == Spalling::no_spalling) ++not_spalled;
    if (a.damage_type) ++types[*a.damage_type];
    if (a.material) materials.insert(*a.material);
    labels.push_back(a.damage_level
                         ? fmt::format("{} ({})", o->label, to_label(*a.damage_level))
                         : o->label);
  }
  if (spalled > 0) {
    out += fmt::format(" Spalling was observed in {} of {} observation{}.", spalled, lines.size(),
                       lines.size() == 1 ? "" : "s");
  } else if (not_spalled > 0) {
    out += " No spalling was observed.";
  }
  if (!types.empty()) {
    std::vector<std::string> parts;
    for (const auto& [t, n] : types) {
      parts.push_back(fmt::format("{} ({})", to_label(t), n));
    }
    out += fmt::format(" Damage types recorded: {}.", join(parts, ", "));
  }
  if (!materials.empty()) {
    std::vector<std::string> parts;
    for (auto m : materials) {
      parts.emplace_back(to_label(m));
    }
    out += fmt::format(" Material: {}.", join_list(parts));
  }
  out += fmt::format(" Components inspected: {}.", join(labels, ", "));
  return out + notes_sentence(lines);
}

std::string headline(const StructurePayload& p) {
  std::optional<DamageLevel> worst;
  for (const auto& o : p.observations) {
    if (o.floor && o.attributes.damage_level && *o.attributes.damage_level != DamageLevel::undamaged &&
        (!worst || *o.attributes.damage_level > *worst)) {
      worst = o.attributes.damage_level;
    }
  }
  for (const auto& c : p.condensed) {
    if (c.worst_level && *c.worst_level != DamageLevel::undamaged &&
        (!worst || *c.worst_level > *worst)) {
      worst = c.worst_level;
    }
  }
  if (!worst) {
    if (p.observations.empty() && p.condensed.empty()) {
      return "No component observations were recorded for this structure.";
    }
    return "No component damage was identified in the extracted attributes.";
  }

  std::map<std::pair<int, int>, int> where;  // (component, floor) -> count
  int total = 0;
  for (const auto& o : p.observations) {
    if (o.floor && o.attributes.damage_level == worst) {
      ++where[{component_code(o.attributes), *o.floor}];
      ++total;
    }
  }
  if (total == 0) {
    return fmt::format("The most severe component damage recorded is {}.", to_label(*worst));
  }
  std::map<int, std::pair<int, std::vector<int>>> by_component;
  for (const auto& [key, n] : where) {
    by_component[key.first].first += n;
    by_component[key.first].second.push_back(key.second);
  }
  std::vector<std::string> parts;
  for (const auto& [comp, info] : by_component) {
    std::vector<std::string> floors;
    for (int f : info.second) {
      floors.push_back(std::to_string(f));
    }
    parts.push_back(fmt::format("{} {} (floor{} {})", info.first,
                                component_noun(comp, info.first), floors.size() == 1 ? "" : "s",
                                join_list(floors)));
  }
  return fmt::format("The most severe component damage recorded is {}, affecting {}.",
                     to_label(*worst), join_list(parts));
}

std::string summarize_structure(const StructurePayload& p) {
  const auto& e = p.event;
  const auto& m = p.metadata;
  const auto name = field(m, "Name");
  std::vector<std::string> paragraphs;

  // Identification.
  {
    std::string s = fmt::format(
        "{}, located at {}, was inspected on {} by {} following the M{} {}, which occurred on {}",
        name, field(m, "Address"), field(m, "Inspected date"), field(m, "Inspection team"),
        field(e, "Magnitude"), field(e, "Event name"), field(e, "Origin date"));
    if (recorded(e, "Origin time (local)")) {
      s += fmt::format(" at {} local time", field(e, "Origin time (local)"));
    }
    if (recorded(e, "Epicenter")) {
      s += fmt::format(" with its epicenter {}", field(e, "Epicenter"));
    }
    s += fmt::format(". The structure is located at {}, {}.", field(m, "Latitude"),
                     field(m, "Longitude"));
    paragraphs.push_back(std::move(s));
  }

  // Construction and occupancy.
  {
    std::string stories_text = field(m, "Stories");
    try {
      stories_text = text::number_word(std::stoi(stories_text));
    } catch (const std::exception&) {
    }
    std::string s = fmt::format(
        "The {}-story structure is of {} construction and is classified as {}, with {} occupancy",
        stories_text, field(m, "Construction"), field(m, "Structure type"), field(m, "Occupancy"));
    if (recorded(m, "Footprint area (sq ft)")) {
      s += fmt::format(" and an approximate footprint area of {} sq ft",
                       field(m, "Footprint area (sq ft)"));
    }
    s += ".";
    if (recorded(m, "Functionality")) {
      s += fmt::format(" Functionality at the time of the survey: {}.", field(m, "Functionality"));
    }
    paragraphs.push_back(std::move(s));
  }

  // Damage narrative.
  {
    std::string s = headline(p);
    std::vector<const ObservationLine*> system;
    std::map<int, std::vector<const ObservationLine*>> floors;
    for (const auto& o : p.observations) {
      if (o.floor) {
        floors[*o.floor].push_back(&o);
      } else {
        system.push_back(&o);
      }
    }
    if (!system.empty()) {
      std::vector<std::string> parts;
      for (const auto* o : system) {
        parts.push_back(fmt::format("{} ({})", o->label, render_attribute_text(o->attributes)));
      }
      s += fmt::format(" System-level imagery: {}.", join(parts, "; "));
      s += notes_sentence(system);
    }
    for (const auto& [floor, lines] : floors) {
      s += " " + floor_sentence(floor, lines);
    }
    for (const auto& c : p.condensed) {
      const auto level = c.worst_level ? std::string(to_label(*c.worst_level))
                                       : std::string("not recorded");
      if (c.floor) {
        s += fmt::format(" Floor {}: {} observations summarized; worst recorded damage level {}.",
                         *c.floor, c.observation_count, level);
      } else {
        s += fmt::format(
            " System level: {} observations summarized; worst recorded damage level {}.",
            c.observation_count, level);
      }
    }
    paragraphs.push_back(std::move(s));
  }

  // Rating and recommendation.
  {
    const auto rating = field(m, "Overall rating");
    std::string s = fmt::format("The field team assigned an {}{}.", kRatingPhrase, rating);
    if (recorded(m, "Assessor comments")) {
      s += fmt::format(" Assessor comments: {}", field(m, "Assessor comments"));
      if (!s.ends_with('.')) {
        s += ".";
      }
    }
    s += " " + rating_recommendation(rating);
    if (recorded(m, "Last updated")) {
      s += fmt::format(" The record was last updated on {} by {}.", field(m, "Last updated"),
                       field(m, "Contributor"));
    } else {
      s += fmt::format(" Data contributed by {}.", field(m, "Contributor"));
    }
    paragraphs.push_back(std::move(s));
  }

  const auto words = attribute_vocabulary(p.observations);
  paragraphs.push_back(std::string(kAttributeLinePrefix) +
                       (words.empty() ? std::string("none") : join(words, ", ")) + ".");
  if (p.truncated) {
    paragraphs.push_back("Some observation details were condensed before summarization.");
  }
  return join(paragraphs, "\n\n") + "\n";
}

struct MemberFindings {
  std::optional<std::vector<std::string>> attribute_words;
  std::optional<std::string> rating;
  std::string headline;
};

MemberFindings read_member_report(std::string_view report) {
  MemberFindings f;
  for (auto line : text::split_lines(report)) {
    if (line.starts_with(kAttributeLinePrefix)) {
      auto list = line.substr(kAttributeLinePrefix.size());
      if (list.ends_with('.')) {
        list.remove_suffix(1);
      }
      std::vector<std::string> words;
      if (list != "none") {
        for (std::size_t start = 0;;) {
          const auto comma = list.find(", ", start);
          words.emplace_back(list.substr(start, comma == std::string_view::npos ? comma
                                                                                : comma - start));
          if (comma == std::string_view::npos) {
            break;
          }
          start = comma + 2;
        }
      }
      f.attribute_words = std::move(words);
    }
  }
  if (auto pos = report.find(kRatingPhrase); pos != std::string_view::npos) {
    auto rest = report.substr(pos + kRatingPhrase.size());
    const auto end = rest.find_first_of(". \n");
    f.rating = std::string(rest.substr(0, end));
  }

  // Offline reports carry a headline sentence; otherwise use the first sentence.
  for (std::string_view marker : {"The most severe component damage recorded",
                                  "No component damage was identified",
                                  "No component observations were recorded"}) {
    if (auto pos = report.find(marker); pos != std::string_view::npos) {
      const auto end = report.find(". ", pos);
      f.headline = std::string(report.substr(pos, end == std::string_view::npos
                                                      ? report.find('\n', pos) - pos
                                                      : end - pos + 1));
      return f;
    }
  }
  const auto flat = text::single_line(text::trim(report));
  const auto end = flat.find(". ");
  f.headline = end == std::string::npos ? flat : flat.substr(0, end + 1);
  return f;
}

std::string summarize_region(const RegionPayload& p) {
  const auto count = p.members.size();
  const auto count_word = text::number_word(static_cast<int>(count));
  std::vector<std::string> paragraphs;

  {
    std::string s = fmt::format(
        "This regional summary covers {} investigated structure{} in the region \"{}\", within a "
        "{} km radius centered at {}.",
        count_word, count == 1 ? "" : "s", field(p.region, "Region name"),
        field(p.region, "Radius (km)"), field(p.region, "Center"));
    paragraphs.push_back(std::move(s));
  }

  std::vector<MemberFindings> findings;
  for (const auto& member : p.members) {
    findings.push_back(read_member_report(member.report));
  }

  {
    std::string s = "Key findings by structure:";
    for (std::size_t i = 0; i < count; ++i) {
      s += fmt::format(" ({}) {} [{}]: {}", i + 1, p.members[i].name, p.members[i].structure_id,
                       findings[i].headline);
      if (findings[i].rating) {
        s += fmt::format(" Overall rating: {}.", *findings[i].rating);
      }
    }
    paragraphs.push_back(std::move(s));
  }

  {
    std::string s;
    const bool all_known = std::all_of(findings.begin(), findings.end(),
                                       [](const auto& f) { return f.attribute_words.has_value(); });
    if (!all_known) {
      s = "Shared attribute values could not be determined because not every structure report "
          "lists its observed attribute values.";
    } else {
      std::vector<std::string> shared = *findings.front().attribute_words;
      for (std::size_t i = 1; i < count; ++i) {
        const auto& words = *findings[i].attribute_words;
        std::erase_if(shared, [&](const std::string& w) {
          return std::find(words.begin(), words.end(), w) == words.end();
        });
      }
      if (shared.empty()) {
        s = count == 1 ? "The structure report lists no observed attribute values."
                       : "No attribute value was recorded for every structure.";
      } else {
        s = fmt::format("Attribute values recorded for {}: {}.",
                        count == 1 ? "the structure" : "each of the " + count_word + " structures",
                        join(shared, ", "));
      }
    }
    std::set<std::string> ratings;
    for (const auto& f : findings) {
      ratings.insert(f.rating.value_or("not stated"));
    }
    if (ratings.size() == 1 && count > 1 && findings.front().rating) {
      s += fmt::format(" All {} structures share an {}{}.", count_word, kRatingPhrase,
                       *findings.front().rating);
    }
    paragraphs.push_back(std::move(s));
  }

  {
    std::map<std::string, int> tally;
    std::string worst = "None";
    for (const auto& f : findings) {
      const auto r = f.rating.value_or("not stated");
      ++tally[r];
      if (rating_rank(r) > rating_rank(worst)) {
        worst = r;
      }
    }
    std::vector<std::string> parts;
    for (const auto& [r, n] : tally) {
      parts.push_back(fmt::format("{} ({})", r, n));
    }
    paragraphs.push_back(fmt::format("Overall ratings across the region: {}. {}",
                                     join(parts, ", "), rating_recommendation(worst)));
  }
  return join(paragraphs, "\n\n") + "\n";
}

}  // namespace

std::string offline_summarize(std::string_view user_message) {
  std::variant<StructurePayload, RegionPayload> payload;
  try {
    payload = prompt::parse_user_message(user_message);
  } catch (const prompt::PayloadError& e) {
    throw LlmError(LlmError::Kind::unrecognized_payload,
                   fmt::format("offline backend cannot read the prompt: {}", e.what()), 1);
  }
  if (const auto* s = std::get_if<StructurePayload>(&payload)) {
    return summarize_structure(*s);
  }
  return summarize_region(std::get<RegionPayload>(payload));
}

}  // namespace drs::llm
