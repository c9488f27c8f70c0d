#include "drs/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "drs/records.hpp"

namespace drs {
namespace {

using records::Json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(fmt::format("cannot open input file \"{}\"", path.string()));
  }
  return in;
}

Json parse_json_text(const std::string& text, const std::string& context) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed JSON: {}", context, e.what()));
  }
}

// Calls `fn(json, context)` for every non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    const auto context = fmt::format("{}:{}", path.filename().string(), line_no);
    fn(parse_json_text(line, context), context);
  }
}

std::string observation_ref(const ImageObservation& o, std::size_t index) {
  return o.image_id.empty() ? fmt::format("observations[{}]", index) : o.image_id;
}

// Orders by (component_label, image_id); an absent label sorts as "".
bool observation_less(const ImageObservation& a, const ImageObservation& b) {
  const std::string& la = a.component_label ? *a.component_label : std::string();
  const std::string& lb = b.component_label ? *b.component_label : std::string();
  if (la != lb) {
    return la < lb;
  }
  return a.image_id < b.image_id;
}

}  // namespace

const StructureMetadata* Dataset::find_structure(std::string_view structure_id) const {
  for (const auto& s : structures) {
    if (s.structure_id == structure_id) {
      return &s;
    }
  }
  return nullptr;
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(
      issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const {
  return issues.size() - error_count();
}

DatasetValidationError::DatasetValidationError(ValidationReport report)
    : Error(fmt::format("dataset rejected with {} error(s):\n{}", report.error_count(),
                        format_report(report))),
      report_(std::move(report)) {}

Dataset read_dataset(const DatasetPaths& paths) {
  Dataset dataset;
  {
    auto in = open_input(paths.event);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto context = paths.event.filename().string();
    dataset.event = records::event_from_json(parse_json_text(buffer.str(), context), context);
  }
  for_each_record(paths.structures, [&](const Json& j, const std::string& context) {
    dataset.structures.push_back(records::structure_from_json(j, context));
  });
  for_each_record(paths.observations, [&](const Json& j, const std::string& context) {
    dataset.observations.push_back(records::observation_from_json(j, context));
  });
  return dataset;
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset dataset = read_dataset(paths);
  auto report = validate(dataset);
  if (!report.accepted()) {
    throw DatasetValidationError(std::move(report));
  }
  return dataset;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  auto error = [&](std::string ref, std::string message) {
    report.issues.push_back({Severity::error, std::move(ref), std::move(message)});
  };
  auto warning = [&](std::string ref, std::string message) {
    report.issues.push_back({Severity::warning, std::move(ref), std::move(message)});
  };

  for (const auto& issue : check(dataset.event)) {
    error("event", fmt::format("{}: {}", issue.field, issue.message));
  }

  std::map<std::string, const StructureMetadata*, std::less<>> structures;
  for (std::size_t i = 0; i < dataset.structures.size(); ++i) {
    const auto& s = dataset.structures[i];
    const auto ref = s.structure_id.empty() ? fmt::format("structures[{}]", i) : s.structure_id;
    for (const auto& issue : check(s)) {
      error(ref, fmt::format("{}: {}", issue.field, issue.message));
    }
    if (!structures.emplace(s.structure_id, &s).second) {
      error(ref, fmt::format("duplicate structure_id \"{}\"", s.structure_id));
    }
  }

  std::set<std::string, std::less<>> image_ids;
  std::map<std::string, std::size_t, std::less<>> per_structure;
  for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
    const auto& o = dataset.observations[i];
    const auto ref = observation_ref(o, i);
    for (const auto& issue : check(o)) {
      error(ref, fmt::format("{}: {}", issue.field, issue.message));
    }
    if (!image_ids.insert(o.image_id).second) {
      error(ref, fmt::format("duplicate image_id \"{}\"", o.image_id));
    }
    auto it = structures.find(o.structure_id);
    if (it == structures.end()) {
      error(ref, fmt::format("references unknown structure_id \"{}\"", o.structure_id));
      continue;
    }
    ++per_structure[o.structure_id];
    if (o.floor && *o.floor > it->second->stories) {
      warning(ref, fmt::format("floor {} exceeds the {} stories of structure \"{}\"", *o.floor,
                               it->second->stories, o.structure_id));
    }
  }

  for (const auto& s : dataset.structures) {
    if (!per_structure.contains(s.structure_id)) {
      warning(s.structure_id, "structure has no image observations");
    }
  }
  return report;
}

std::vector<StructureDocument> merge_documents(const Dataset& dataset) {
  auto report = validate(dataset);
  if (!report.accepted()) {
    throw DatasetValidationError(std::move(report));
  }

  std::map<std::string, std::vector<const ImageObservation*>, std::less<>> by_structure;
  for (const auto& o : dataset.observations) {
    by_structure[o.structure_id].push_back(&o);
  }

  std::vector<StructureDocument> documents;
  documents.reserve(dataset.structures.size());
  for (const auto& s : dataset.structures) {
    StructureDocument doc;
    doc.event = dataset.event;
    doc.metadata = s;

    std::map<int, std::vector<ImageObservation>> floors;
    if (auto it = by_structure.find(s.structure_id); it != by_structure.end()) {
      for (const auto* o : it->second) {
        if (o->scope == ObservationScope::system) {
          doc.system_observations.push_back(*o);
        } else {
          floors[*o->floor].push_back(*o);
        }
      }
    }
    std::sort(doc.system_observations.begin(), doc.system_observations.end(), observation_less);
    for (auto& [floor, observations] : floors) {
      std::sort(observations.begin(), observations.end(), observation_less);
      doc.floors.push_back({floor, std::move(observations)});
    }
    documents.push_back(std::move(doc));
  }
  return documents;
}

std::vector<ImageObservation> flatten(const StructureDocument& document) {
  std::vector<ImageObservation> out = document.system_observations;
  for (const auto& group : document.floors) {
    out.insert(out.end(), group.observations.begin(), group.observations.end());
  }
  return out;
}

std::string format_report(const ValidationReport& report) {
  std::string out;
  for (const auto& issue : report.issues) {
    out += fmt::format("{}: [{}] {}\n", issue.severity == Severity::error ? "error" : "warning",
                       issue.record_ref, issue.message);
  }
  out += fmt::format("{} error(s), {} warning(s)\n", report.error_count(), report.warning_count());
  return out;
}

}  // namespace drs
