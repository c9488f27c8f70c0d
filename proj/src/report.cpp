#include "drs/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "drs/dms.hpp"
#include "drs/log.hpp"
#include "drs/text.hpp"

namespace drs::report {
namespace {

using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(fmt::format("{}: cannot open file", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw Error(fmt::format("{}: cannot write file", path.string()));
  }
}

const StructureMetadata* find_member(std::span<const StructureMetadata> structures,
                                     std::string_view id) {
  for (const auto& s : structures) {
    if (s.structure_id == id) {
      return &s;
    }
  }
  return nullptr;
}

Json extractor_json(const ExtractorBackendConfig& c) {
  Json j;
  j["kind"] = to_label(c.kind);
  j["manifest_path"] = c.manifest_path ? Json(c.manifest_path->generic_string()) : Json();
  j["endpoint_url"] = c.endpoint_url ? Json(*c.endpoint_url) : Json();
  j["timeout_ms"] = c.timeout_ms;
  j["max_retries"] = c.max_retries;
  j["max_in_flight"] = c.max_in_flight;
  return j;
}

Json llm_json(const llm::LlmBackendConfig& c) {
  Json j;
  j["kind"] = to_label(c.kind);
  j["base_url"] = c.base_url ? Json(*c.base_url) : Json();
  j["model_name"] = c.model_name ? Json(*c.model_name) : Json();
  j["api_key_env_var"] = c.api_key_env_var;
  j["timeout_ms"] = c.timeout_ms;
  j["max_retries"] = c.max_retries;
  return j;
}

Json config_json(const PipelineConfig& c) {
  const auto& t = c.prompt.resolved_templates();
  Json j;
  j["extractor"] = extractor_json(c.extractor);
  j["llm"] = llm_json(c.llm);
  j["prompt"] = Json{{"budget_tokens", c.prompt.budget_tokens},
                     {"temperature", c.prompt.temperature},
                     {"max_output_tokens", c.prompt.max_output_tokens},
                     {"templates", text::fnv1a_hex(t.system_message + '\0' + t.structure_goal +
                                                   '\0' + t.region_goal)}};
  if (c.region) {
    j["region"] = Json{{"name", c.region->name},
                       {"center", Json::array({c.region->center.lat, c.region->center.lon})},
                       {"radius_km", c.region->radius_km}};
  } else {
    j["region"] = nullptr;
  }
  return j;
}

// About 1 cm; hides binary noise such as -66.62039999999999 from DMS input.
double round7(double degrees) { return std::round(degrees * 1e7) / 1e7; }

PipelineFailure llm_failure(std::string subject, const llm::LlmError& e) {
  return {"llm", std::move(subject), std::string(llm::to_string(e.kind())), e.what()};
}

struct Completion {
  std::optional<std::string> text;
  std::optional<PipelineFailure> failure;
};

Completion complete_one(const prompt::PromptBundle& bundle, const PipelineConfig& config,
                        const PipelineHooks& hooks, const std::string& subject) {
  try {
    auto result = llm::complete(config.llm, bundle, hooks.completion);
    log::debug("{}: completion in {} attempt(s)", subject, result.attempts);
    return {std::move(result.text), std::nullopt};
  } catch (const llm::LlmError& e) {
    log::error("{}: {}", subject, e.what());
    return {std::nullopt, llm_failure(subject, e)};
  }
}

void write_manifest(const PipelineConfig& config, const PipelineResult& result,
                    const std::string& started, const std::string& finished) {
  Json manifest;
  Json inputs = Json::object();
  for (const auto& [key, path] : {std::pair{"event", &config.inputs.event},
                                  std::pair{"structures", &config.inputs.structures},
                                  std::pair{"observations", &config.inputs.observations}}) {
    Json entry{{"path", path->generic_string()}};
    std::error_code ec;
    if (std::filesystem::is_regular_file(*path, ec)) {
      entry["fnv1a"] = text::fnv1a_hex(read_file(*path));
    }
    inputs[key] = std::move(entry);
  }
  manifest["inputs"] = std::move(inputs);
  manifest["config_hash"] = config_hash(config);
  manifest["config"] = config_json(config);

  Json outputs = Json::array();
  for (const auto& rel : result.outputs) {
    outputs.push_back(Json{{"path", rel.generic_string()},
                           {"fnv1a", text::fnv1a_hex(read_file(config.out_dir / rel))}});
  }
  manifest["outputs"] = std::move(outputs);

  Json failures = Json::array();
  for (const auto& f : result.failures) {
    failures.push_back(Json{
        {"stage", f.stage}, {"subject", f.subject}, {"kind", f.kind}, {"message", f.message}});
  }
  manifest["failures"] = std::move(failures);
  manifest["timestamps"] = Json{{"started", started}, {"finished", finished}};
  write_file(config.out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

int count_components(const StructureDocument& doc, ComponentType component,
                     DamageLevel level_at_least) {
  int count = 0;
  for (const auto& floor : doc.floors) {
    for (const auto& o : floor.observations) {
      if (o.scope != ObservationScope::component || !o.attributes) {
        continue;
      }
      const auto& a = *o.attributes;
      if (a.component_type == component && a.damage_level && *a.damage_level >= level_at_least) {
        ++count;
      }
    }
  }
  return count;
}

std::string stories_detail(int stories) {
  return text::capitalize(text::number_word(stories)) + "-story";
}

ReportArtifact render_structure_report(const StructureDocument& doc, const std::string& summary) {
  if (text::trim(summary).empty()) {
    throw ValidationError("summary", "must be non-empty");
  }
  const auto& m = doc.metadata;
  ReportArtifact a;
  a.title = m.name;
  a.sidebar = {
      {"Magnitude", "M" + text::format_magnitude(doc.event.magnitude)},
      {"Date", format_long_date(m.inspected_date)},
      {"Longitude", format_dms(m.location.lon, Axis::lon)},
      {"Latitude", format_dms(m.location.lat, Axis::lat)},
      {"Type", m.structure_type},
      {"Details", stories_detail(m.stories)},
      {"Overall rating", text::capitalize(to_label(m.overall_rating))},
      {"Contributor", m.contributor},
  };
  for (const auto& o : flatten(doc)) {
    a.image_refs.push_back(o.image_uri);
  }
  a.body = summary;
  return a;
}

ReportArtifact render_region_report(const Region& region,
                                    std::span<const StructureMetadata> structures,
                                    const std::string& summary) {
  if (text::trim(summary).empty()) {
    throw ValidationError("summary", "must be non-empty");
  }
  require_valid(region);
  ReportArtifact a;
  a.title = "Regional summary: " + region.region_name;
  std::vector<Marker> markers;
  std::vector<GeoPoint> points;
  for (const auto& id : region.member_ids) {
    const auto* s = find_member(structures, id);
    if (s == nullptr) {
      throw ValidationError("structures", fmt::format("missing region member \"{}\"", id));
    }
    markers.push_back(
        {s->structure_id, s->name, text::capitalize(to_label(s->overall_rating)), s->location});
    points.push_back(s->location);
  }
  a.body = fmt::format("The region encompasses the coordinates {}.\n\n{}",
                       geo::format_corners(geo::bounding_box(points)), summary);
  a.markers = std::move(markers);
  return a;
}

std::string to_markdown(const ReportArtifact& artifact) {
  std::string out;
  if (!artifact.sidebar.empty()) {
    out += "---\n";
    for (const auto& [label, value] : artifact.sidebar) {
      out += fmt::format("{}: {}\n", label, text::single_line(value));
    }
    out += "---\n\n";
  }
  out += fmt::format("# {}\n\n", text::single_line(artifact.title));
  out += artifact.body;
  if (!out.ends_with('\n')) {
    out += '\n';
  }
  if (artifact.markers) {
    out += "\n## Investigated structures\n\n";
    out += "| Structure | ID | Overall rating | Latitude | Longitude |\n";
    out += "|---|---|---|---|---|\n";
    for (const auto& m : *artifact.markers) {
      out += fmt::format("| {} | {} | {} | {:.6f} | {:.6f} |\n", m.name, m.structure_id,
                         m.overall_rating, m.location.lat, m.location.lon);
    }
  }
  if (!artifact.image_refs.empty()) {
    out += "\n## Photographs\n\n";
    for (const auto& ref : artifact.image_refs) {
      out += fmt::format("- {}\n", ref);
    }
  }
  return out;
}

std::string to_geojson(const ReportArtifact& artifact) {
  if (!artifact.markers) {
    throw ValidationError("markers", "artifact has no map markers");
  }
  Json features = Json::array();
  for (const auto& m : *artifact.markers) {
    features.push_back(Json{
        {"type", "Feature"},
        {"geometry",
         Json{{"type", "Point"}, {"coordinates", Json::array({round7(m.location.lon), round7(m.location.lat)})}}},
        {"properties",
         Json{{"name", m.name}, {"overall_rating", m.overall_rating},
              {"structure_id", m.structure_id}}},
    });
  }
  Json collection{{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return collection.dump(2) + "\n";
}

std::string file_stem(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? std::string("_") : out;
}

ExtractionFailedError::ExtractionFailedError(std::vector<PipelineFailure> failures)
    : Error(fmt::format("attribute extraction failed for {} image(s)", failures.size())),
      failures_(std::move(failures)) {}

std::string config_hash(const PipelineConfig& config) {
  return text::fnv1a_hex(config_json(config).dump());
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long value = std::strtoll(epoch, &end, 10);
    if (end != nullptr && *end == '\0' && value >= 0) {
      t = static_cast<std::time_t>(value);
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks) {
  const auto now = hooks.timestamp ? hooks.timestamp : std::function<std::string()>(utc_timestamp);
  const auto started = now();
  PipelineResult result;

  const Dataset dataset = load_dataset(config.inputs);
  log::info("loaded {} structure(s) and {} observation(s)", dataset.structures.size(),
            dataset.observations.size());

  const auto extractor = make_extractor(config.extractor, hooks.extractor_retry);
  auto outcome = extract_all(*extractor, dataset);
  if (!outcome.ok()) {
    for (const auto& f : outcome.failures) {
      result.failures.push_back(
          {"extract", f.image_id, std::string(to_string(f.kind)), f.message});
    }
    write_manifest(config, result, started, now());
    throw ExtractionFailedError(result.failures);
  }

  const auto documents = merge_documents(outcome.dataset);

  // Region membership is settled before any completion so a bad region
  // fails fast.
  std::optional<Region> region;
  if (config.region) {
    region = geo::build_region(config.region->name, config.region->center,
                               config.region->radius_km, outcome.dataset);
  }

  // Per-structure prompt and completion, bounded by the remote limiter.
  std::vector<Completion> completions(documents.size());
  std::vector<std::optional<PipelineFailure>> prompt_failures(documents.size());
  auto work = [&](std::size_t i) {
    const auto& doc = documents[i];
    prompt::PromptBundle bundle;
    try {
      bundle = prompt::build_structure_prompt(doc, config.prompt);
    } catch (const prompt::BudgetError& e) {
      prompt_failures[i] = PipelineFailure{"prompt", doc.metadata.structure_id, "budget", e.what()};
      return;
    }
    completions[i] = complete_one(bundle, config, hooks, doc.metadata.structure_id);
  };
  const std::size_t workers =
      config.llm.kind == llm::BackendKind::remote
          ? std::min<std::size_t>(documents.size(),
                                  static_cast<std::size_t>(llm::remote_limiter().limit()))
          : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < documents.size(); ++i) {
      work(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < documents.size(); i = next++) {
          work(i);
        }
      });
    }
  }

  std::map<std::string, std::string, std::less<>> bodies;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const auto& id = documents[i].metadata.structure_id;
    if (prompt_failures[i]) {
      result.failures.push_back(*prompt_failures[i]);
      continue;
    }
    if (!completions[i].text) {
      result.failures.push_back(*completions[i].failure);
      continue;
    }
    const auto artifact = render_structure_report(documents[i], *completions[i].text);
    const auto rel = std::filesystem::path("reports") / (file_stem(id) + ".md");
    write_file(config.out_dir / rel, to_markdown(artifact));
    result.outputs.push_back(rel);
    ++result.structure_reports;
    bodies.emplace(id, *completions[i].text);
  }

  if (region) {
    std::vector<std::string> missing;
    std::vector<std::string> reports;
    for (const auto& id : region->member_ids) {
      if (auto it = bodies.find(id); it != bodies.end()) {
        reports.push_back(it->second);
      } else {
        missing.push_back(id);
      }
    }
    if (!missing.empty()) {
      result.failures.push_back(
          {"region", region->region_name, "missing_member_report",
           fmt::format("no report for member(s): {}", fmt::join(missing, ", "))});
    } else {
      std::optional<std::string> summary;
      try {
        const auto bundle = prompt::build_region_prompt(*region, outcome.dataset.structures,
                                                        reports, config.prompt);
        auto done = complete_one(bundle, config, hooks, region->region_name);
        if (done.failure) {
          done.failure->stage = "region";
          result.failures.push_back(*done.failure);
        }
        summary = std::move(done.text);
      } catch (const prompt::BudgetError& e) {
        result.failures.push_back({"region", region->region_name, "budget", e.what()});
      }
      if (summary) {
        const auto artifact =
            render_region_report(*region, outcome.dataset.structures, *summary);
        const auto stem = "region_" + file_stem(region->region_name);
        const auto md = std::filesystem::path("reports") / (stem + ".md");
        const auto geojson = std::filesystem::path("reports") / (stem + ".geojson");
        write_file(config.out_dir / md, to_markdown(artifact));
        write_file(config.out_dir / geojson, to_geojson(artifact));
        result.outputs.push_back(md);
        result.outputs.push_back(geojson);
        result.region_report = true;
      }
    }
  }

  write_manifest(config, result, started, now());
  log::info("wrote {} structure report(s){}", result.structure_reports,
            result.region_report ? " and 1 regional report" : "");
  return result;
}

}  // namespace drs::report
