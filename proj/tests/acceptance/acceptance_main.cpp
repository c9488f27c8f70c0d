// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "drs/dms.hpp"
#include "drs/geo.hpp"
#include "drs/ingest.hpp"
#include "drs/llm.hpp"
#include "drs/log.hpp"
#include "drs/prompt.hpp"
#include "drs/report.hpp"
#include "fixtures.hpp"
#include "geodesic_oracle.hpp"
#include "mock_server.hpp"
#include "random_data.hpp"

namespace {

using namespace drs;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, std::string what) {
    if (!ok) {
      pass = false;
      notes.push_back(std::move(what));
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_of(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

std::vector<StructureDocument> fixture_documents() {
  ExtractorBackendConfig config;
  config.manifest_path = testing::puerto_rico_manifest();
  const auto outcome = extract_all(config, load_dataset(testing::puerto_rico_paths()));
  return merge_documents(outcome.dataset);
}

// Sidebars of the two case-study structures.
const std::map<std::string, std::vector<std::pair<std::string, std::string>>> kCaseStudySidebars{
    {"pr-san-jorge",
     {{"Magnitude", "M6.4"},
      {"Date", "January 11, 2020"},
      {"Longitude", "66° 37' 13.44\" W"},
      {"Latitude", "17° 59' 59.28\" N"},
      {"Type", "Residential building"},
      {"Details", "Three-story"},
      {"Overall rating", "Severe"},
      {"Contributor", "Jorge Archbold"}}},
    {"pr-calle-salud",
     {{"Magnitude", "M6.4"},
      {"Date", "January 11, 2020"},
      {"Longitude", "66° 36' 45\" W"},
      {"Latitude", "18° 0' 26.64\" N"},
      {"Type", "Residential building"},
      {"Details", "Seven-story"},
      {"Overall rating", "Severe"},
      {"Contributor", "Jorge Archbold"}}},
};

// ---------------------------------------------------------------------------

Outcome a1_coordinates() {
  Outcome o;
  const auto start = Clock::now();
  const std::vector<std::pair<std::string, double>> case_study{
      {"66° 37' 13.44\" W", -66.6204},
      {"17° 59' 59.28\" N", 17.9998},
      {"66° 36' 45\" W", -66.6125},
      {"18° 0' 26.64\" N", 18.0074},
  };
  double worst = 0.0;
  for (const auto& [text, expected] : case_study) {
    const double got = parse_dms(text);
    worst = std::max(worst, std::abs(got - expected));
    o.expect(std::abs(got - expected) <= 1e-4, fmt::format("{} -> {}", text, got));
  }
  std::mt19937 rng(20200107);
  std::uniform_real_distribution<double> lat(-90.0, 90.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  double worst_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = lat(rng);
    const double b = lon(rng);
    worst_trip = std::max(worst_trip, std::abs(parse_dms(format_dms(a, Axis::lat)) - a));
    worst_trip = std::max(worst_trip, std::abs(parse_dms(format_dms(b, Axis::lon)) - b));
  }
  for (const auto& [text, expected] : case_study) {
    const auto axis = text.back() == 'N' ? Axis::lat : Axis::lon;
    worst_trip = std::max(worst_trip, std::abs(parse_dms(format_dms(expected, axis)) - expected));
  }
  o.expect(worst_trip <= 2e-6, fmt::format("round trip error {}", worst_trip));
  const double elapsed = seconds_since(start);
  o.expect(elapsed < 1.0, fmt::format("runtime {:.3f} s", elapsed));
  o.notes.insert(o.notes.begin(), fmt::format("max |error| {:.2e}, round trip {:.2e}, {:.3f} s",
                                              worst, worst_trip, elapsed));
  return o;
}

Outcome a2_bounding_box() {
  Outcome o;
  const auto docs = fixture_documents();
  const std::vector<GeoPoint> pts{docs[0].metadata.location, docs[1].metadata.location};
  const auto box = geo::bounding_box(pts);
  o.expect(std::abs(box.min_corner.lat - 17.9998) <= 1e-4, "min lat");
  o.expect(std::abs(box.min_corner.lon - -66.6204) <= 1e-4, "min lon");
  o.expect(std::abs(box.max_corner.lat - 18.0074) <= 1e-4, "max lat");
  o.expect(std::abs(box.max_corner.lon - -66.6125) <= 1e-4, "max lon");
  o.notes.insert(o.notes.begin(), geo::format_corners(box));
  return o;
}

Outcome a3_region() {
  Outcome o;
  const auto dataset = load_dataset(testing::puerto_rico_paths());
  const auto& sj = *dataset.find_structure("pr-san-jorge");
  const auto& cs = *dataset.find_structure("pr-calle-salud");
  const double d = geo::haversine_km(sj.location, cs.location);
  const auto oracle =
      testing::vincenty_km(sj.location.lat, sj.location.lon, cs.location.lat, cs.location.lon);
  o.expect(d >= 1.17 && d <= 1.21, fmt::format("haversine {} km", d));
  o.expect(oracle && *oracle >= 1.17 && *oracle <= 1.21, "ellipsoidal oracle out of range");
  o.expect(oracle && std::abs(d - *oracle) <= 0.01, "haversine disagrees with oracle");

  const auto wide = geo::build_region("Guayanilla", sj.location, 2.0, dataset);
  o.expect(wide.member_ids.size() == 3, fmt::format("2 km: {} member(s)", wide.member_ids.size()));
  const auto narrow = geo::select_in_radius(sj.location, 1.0, dataset.structures);
  o.expect(std::find(narrow.begin(), narrow.end(), "pr-calle-salud") == narrow.end(),
           "1 km includes Calle Salud");
  o.expect(std::find(narrow.begin(), narrow.end(), "pr-san-jorge") != narrow.end(),
           "1 km excludes the center");
  o.notes.insert(o.notes.begin(),
                 fmt::format("haversine {:.4f} km, ellipsoid {:.4f} km, 2 km -> {}, 1 km -> {}", d,
                             oracle.value_or(-1.0), wide.member_ids.size(), narrow.size()));
  return o;
}

Outcome a4_counting() {
  Outcome o;
  const auto docs = fixture_documents();
  const int sj = report::count_components(docs[0], ComponentType::column, DamageLevel::heavy);
  const int cs = report::count_components(docs[1], ComponentType::column, DamageLevel::minor);
  o.expect(sj == 4, fmt::format("San Jorge heavy columns {}", sj));
  o.expect(cs == 2, fmt::format("Calle Salud columns >= minor {}", cs));

  std::mt19937 rng(4);
  int checked = 0;
  int mismatches = 0;
  while (checked < 500) {
    for (const auto& doc : merge_documents(testing::random_dataset(rng))) {
      if (checked >= 500) {
        break;
      }
      ++checked;
      for (auto type : all_values<ComponentType>()) {
        for (auto level : all_values<DamageLevel>()) {
          int expected = 0;
          for (const auto& obs : flatten(doc)) {
            if (obs.scope == ObservationScope::component && obs.attributes &&
                obs.attributes->component_type == type && obs.attributes->damage_level &&
                static_cast<int>(*obs.attributes->damage_level) >= static_cast<int>(level)) {
              ++expected;
            }
          }
          mismatches += report::count_components(doc, type, level) != expected ? 1 : 0;
        }
      }
    }
  }
  o.expect(mismatches == 0, fmt::format("{} brute-force mismatch(es)", mismatches));
  o.notes.insert(o.notes.begin(),
                 fmt::format("San Jorge {} heavy columns, Calle Salud {} columns >= minor, {} "
                             "random documents",
                             sj, cs, checked));
  return o;
}

// Front-matter "Label: value" pairs of a rendered report.
std::vector<std::pair<std::string, std::string>> front_matter(const std::string& md) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(md);
  std::string line;
  std::getline(in, line);
  if (line != "---") {
    return out;
  }
  while (std::getline(in, line) && line != "---") {
    const auto colon = line.find(": ");
    if (colon != std::string::npos) {
      out.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
  }
  return out;
}

int run_drs(const std::filesystem::path& out_dir) {
  const auto paths = testing::puerto_rico_paths();
  const auto cmd = fmt::format(
      "\"{}\" --quiet report --event \"{}\" --structures \"{}\" --observations \"{}\" "
      "--extractor manifest --manifest \"{}\" --llm offline --out \"{}\" --region Guayanilla "
      "--center 17.9998,-66.6204 --radius-km 2",
      DRS_EXE, paths.event.string(), paths.structures.string(), paths.observations.string(),
      testing::puerto_rico_manifest().string(), out_dir.string());
  return std::system(cmd.c_str());
}

Outcome a5_end_to_end() {
  Outcome o;
  ::setenv("SOURCE_DATE_EPOCH", "1578385440", 1);
  const auto first = testing::scratch_dir("acceptance_a5_first");
  const auto second = testing::scratch_dir("acceptance_a5_second");
  double worst_runtime = 0.0;
  for (const auto& dir : {first, second}) {
    const auto start = Clock::now();
    const int status = run_drs(dir);
    worst_runtime = std::max(worst_runtime, seconds_since(start));
    o.expect(status == 0, fmt::format("drs report exited with {}", status));
  }
  o.expect(worst_runtime < 5.0, fmt::format("runtime {:.3f} s", worst_runtime));

  std::size_t structure_reports = 0;
  std::size_t region_reports = 0;
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file()) {
      continue;
    }
    ++files;
    const auto rel = std::filesystem::relative(entry.path(), first);
    const auto name = rel.filename().string();
    if (rel.parent_path() == "reports" && name.ends_with(".md")) {
      (name.starts_with("region_") ? region_reports : structure_reports) += 1;
    }
    o.expect(slurp(entry.path()) == slurp(second / rel),
             fmt::format("{} differs between runs", rel.generic_string()));
  }
  o.expect(structure_reports == 3, fmt::format("{} structure report(s)", structure_reports));
  o.expect(region_reports == 1, fmt::format("{} regional report(s)", region_reports));

  const std::map<std::string, std::vector<std::string>> words{
      {"pr-san-jorge", {"heavy", "spalling", "combined"}},
      {"pr-calle-salud", {"shear"}},
  };
  for (const auto& [id, expected] : kCaseStudySidebars) {
    const auto md = slurp(first / "reports" / (id + ".md"));
    const auto sidebar = front_matter(md);
    o.expect(sidebar.size() == expected.size(), fmt::format("{}: {} sidebar pairs", id,
                                                            sidebar.size()));
    for (std::size_t i = 0; i < expected.size() && i < sidebar.size(); ++i) {
      const auto& [label, value] = expected[i];
      o.expect(sidebar[i].first == label, fmt::format("{}: label {}", id, sidebar[i].first));
      if (label == "Longitude" || label == "Latitude") {
        // Compared as angles: the report always prints two decimals of a second.
        o.expect(std::abs(parse_dms(sidebar[i].second) - parse_dms(value)) <= 1e-9,
                 fmt::format("{}: {} {}", id, label, sidebar[i].second));
      } else {
        o.expect(sidebar[i].second == value,
                 fmt::format("{}: {} \"{}\"", id, label, sidebar[i].second));
      }
    }
    for (const auto& w : words.at(id)) {
      o.expect(md.find(w) != std::string::npos, fmt::format("{}: lacks \"{}\"", id, w));
    }
  }
  // The synthetic third structure carries the same eight labels.
  const auto mm = front_matter(slurp(first / "reports" / "pr-mcmanus.md"));
  o.expect(mm.size() == report::kSidebarLabels.size(), "pr-mcmanus sidebar");
  o.notes.insert(o.notes.begin(),
                 fmt::format("{} structure + {} regional report(s), {} file(s) identical across "
                             "runs, slowest run {:.3f} s",
                             structure_reports, region_reports, files, worst_runtime));
  return o;
}

Outcome a6_prompts() {
  Outcome o;
  const auto system = prompt::build_system_message();
  for (auto fragment : {prompt::kTaskFragment, prompt::kTermsFragment, prompt::kRulesFragment}) {
    const auto n = count_of(system, fragment);
    o.expect(n == 1, fmt::format("fragment \"{}...\" appears {} time(s)", fragment.substr(0, 30),
                                 n));
  }
  const auto docs = fixture_documents();
  std::vector<StructureMetadata> meta;
  std::vector<std::string> reports;
  for (const auto& d : docs) {
    meta.push_back(d.metadata);
  }
  const auto dataset = load_dataset(testing::puerto_rico_paths());
  const auto region =
      geo::build_region("Guayanilla", dataset.find_structure("pr-san-jorge")->location, 2.0,
                        dataset);
  for (const auto& id : region.member_ids) {
    const auto it = std::find_if(docs.begin(), docs.end(),
                                 [&](const auto& d) { return d.metadata.structure_id == id; });
    reports.push_back(llm::offline_summarize(prompt::build_structure_prompt(*it).user_message));
  }
  const auto bundle = prompt::build_region_prompt(region, meta, reports);
  constexpr std::string_view corners = "17.9998, -66.6204 to 18.0074, -66.6125";
  o.expect(bundle.user_message.find(corners) != std::string::npos, "corner string missing");
  o.expect(count_of(bundle.system_message, prompt::kTaskFragment) == 1,
           "region system message fragments");
  o.notes.insert(o.notes.begin(), fmt::format("3 fragments once each, corners \"{}\"", corners));
  return o;
}

Outcome a7_merge() {
  Outcome o;
  using Key = std::pair<std::string, std::string>;
  const auto by_key = [](const std::vector<ImageObservation>& obs) {
    std::multimap<Key, ImageObservation> out;
    for (const auto& x : obs) {
      out.emplace(Key{x.structure_id, x.image_id}, x);
    }
    return out;
  };
  std::mt19937 rng(20200107);
  int violations = 0;
  for (int round = 0; round < 200; ++round) {
    const auto d = testing::random_dataset(rng);
    const auto docs = merge_documents(d);
    std::vector<ImageObservation> all;
    for (const auto& doc : docs) {
      std::vector<ImageObservation> expected;
      for (const auto& x : d.observations) {
        if (x.structure_id == doc.metadata.structure_id) {
          expected.push_back(x);
        }
      }
      const auto flat = flatten(doc);
      violations += by_key(flat) != by_key(expected) ? 1 : 0;
      for (std::size_t f = 1; f < doc.floors.size(); ++f) {
        violations += doc.floors[f - 1].floor < doc.floors[f].floor ? 0 : 1;
      }
      all.insert(all.end(), flat.begin(), flat.end());
    }
    violations += all.size() != d.observations.size() ? 1 : 0;
    violations += merge_documents(Dataset{d.event, d.structures, all}) != docs ? 1 : 0;
  }
  o.expect(violations == 0, fmt::format("{} violation(s)", violations));
  o.notes.insert(o.notes.begin(), "200 random datasets");
  return o;
}

Outcome a8_remote() {
  Outcome o;
  using testing::chat_body;
  using testing::MockServer;
  using testing::ScriptedResponse;

  llm::CompletionHooks hooks;
  hooks.retry.sleep = [](std::chrono::milliseconds) {};
  hooks.retry.unit_draw = [] { return 0.0; };
  hooks.getenv = [](const std::string&) { return std::optional<std::string>("test-key"); };
  const auto config_for = [](const MockServer& server) {
    llm::LlmBackendConfig c;
    c.kind = llm::BackendKind::remote;
    c.base_url = server.url();
    c.model_name = "mock-model";
    c.timeout_ms = 5000;
    c.max_retries = 3;
    return c;
  };
  const auto docs = fixture_documents();
  const auto bundle = prompt::build_structure_prompt(docs[0]);
  const std::string text = "Line one of the report.\n\n* a bullet with \"quotes\" & symbols °\n";

  {
    MockServer server({{429, ""}, {429, ""}, {200, chat_body(text)}});
    const auto r = llm::complete(config_for(server), bundle, hooks);
    o.expect(r.attempts == 3, fmt::format("(429,429,200): {} attempt(s)", r.attempts));
    o.expect(r.text == text, "(429,429,200): text altered");
  }
  const auto expect_error = [&](std::vector<ScriptedResponse> script, llm::LlmError::Kind kind,
                                std::string_view label) {
    MockServer server(std::move(script));
    try {
      llm::complete(config_for(server), bundle, hooks);
      o.expect(false, fmt::format("{}: succeeded", label));
    } catch (const llm::LlmError& e) {
      o.expect(e.kind() == kind, fmt::format("{}: {}", label, llm::to_string(e.kind())));
      return e.attempts();
    }
    return 0;
  };
  const int exhausted = expect_error({{500, ""}, {500, ""}, {500, ""}, {500, ""}},
                                     llm::LlmError::Kind::retries_exhausted, "(500x4)");
  o.expect(exhausted == 4, fmt::format("(500x4): {} attempt(s)", exhausted));
  expect_error({{200, "{\"choices\": [{\"message\": "}}, llm::LlmError::Kind::protocol,
               "(200 malformed)");

  // Verbatim embedding through the full pipeline.
  MockServer server({{429, ""}, {200, chat_body(text)}});
  report::PipelineConfig config;
  config.inputs = testing::puerto_rico_paths();
  config.out_dir = testing::scratch_dir("acceptance_a8");
  config.extractor.manifest_path = testing::puerto_rico_manifest();
  config.llm = config_for(server);
  report::PipelineHooks pipeline_hooks;
  pipeline_hooks.completion = hooks;
  const auto result = report::run_pipeline(config, pipeline_hooks);
  o.expect(result.ok() && result.structure_reports == 3, "remote pipeline failed");
  for (const auto& doc : docs) {
    const auto md = slurp(config.out_dir / "reports" / (doc.metadata.structure_id + ".md"));
    const auto expected = fmt::format("# {}\n\n{}", doc.metadata.name, text);
    o.expect(md.find(expected) != std::string::npos,
             fmt::format("{}: body is not the returned text", doc.metadata.structure_id));
  }
  o.notes.insert(o.notes.begin(),
                 "(429,429,200) ok in 3 attempts, (500x4) retries_exhausted, (200 malformed) "
                 "protocol, text embedded verbatim");
  return o;
}

}  // namespace

int main() {
  drs::log::set_verbosity(drs::log::Verbosity::quiet);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1 coordinate fidelity", a1_coordinates}, {"A2 bounding box", a2_bounding_box},
      {"A3 region selection", a3_region},         {"A4 automated counting", a4_counting},
      {"A5 deterministic end-to-end", a5_end_to_end}, {"A6 prompt conformance", a6_prompts},
      {"A7 merge conservation", a7_merge},        {"A8 remote-path behavior", a8_remote},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(fmt::format("exception: {}", e.what()));
    }
    failed += o.pass ? 0 : 1;
    std::string detail;
    for (const auto& n : o.notes) {
      detail += (detail.empty() ? "" : "; ") + n;
    }
    std::cout << fmt::format("{} {} ({})", name.substr(0, 2), o.pass ? "PASS" : "FAIL",
                             name.substr(3))
              << (detail.empty() ? "" : ": " + detail) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
