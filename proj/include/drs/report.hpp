#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drs/extract.hpp"
#include "drs/geo.hpp"
#include "drs/ingest.hpp"
#include "drs/llm.hpp"
#include "drs/model.hpp"
#include "drs/prompt.hpp"

namespace drs::report {

// Sidebar labels of an individual report, in order.
inline constexpr std::array<std::string_view, 8> kSidebarLabels{
    "Magnitude", "Date", "Longitude", "Latitude", "Type", "Details", "Overall rating",
    "Contributor"};

struct Marker {
  std::string structure_id;
  std::string name;
  std::string overall_rating;
  GeoPoint location;

  bool operator==(const Marker&) const = default;
};

struct ReportArtifact {
  std::string title;
  std::vector<std::pair<std::string, std::string>> sidebar;  // empty for regional reports
  std::string body;
  std::vector<std::string> image_refs;
  std::optional<std::vector<Marker>> markers;  // regional reports only

  bool operator==(const ReportArtifact&) const = default;
};

// Component observations with the given type and a damage level at least
// `level_at_least`. Observations without a damage level never count.
int count_components(const StructureDocument& doc, ComponentType component,
                     DamageLevel level_at_least);

// "Three-story" for 1..10 stories, "12-story" above.
std::string stories_detail(int stories);

// Sidebar from event and metadata; image_refs are the observation URIs in
// document order. Throws ValidationError for an empty summary.
ReportArtifact render_structure_report(const StructureDocument& doc, const std::string& summary);

// One marker per member in member_ids order; the body starts with a line
// stating the bounding-box corners. Throws ValidationError when `structures`
// lacks a member or the summary is empty.
ReportArtifact render_region_report(const Region& region,
                                    std::span<const StructureMetadata> structures,
                                    const std::string& summary);

// Markdown with a front-matter sidebar block.
std::string to_markdown(const ReportArtifact& artifact);

// FeatureCollection of Point features, [lon, lat] order. Throws
// ValidationError when the artifact has no markers.
std::string to_geojson(const ReportArtifact& artifact);

// Letters, digits, '-' and '_' kept; everything else becomes '_'.
std::string file_stem(std::string_view name);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RegionSpec {
  std::string name;
  GeoPoint center;
  double radius_km = 0.0;
};

struct PipelineConfig {
  DatasetPaths inputs;
  std::filesystem::path out_dir;
  ExtractorBackendConfig extractor;
  llm::LlmBackendConfig llm;
  std::optional<RegionSpec> region;
  prompt::Options prompt;
};

struct PipelineHooks {
  llm::CompletionHooks completion;
  http::RetryHooks extractor_retry = http::RetryHooks::system();
  // UTC timestamp for the run manifest; SOURCE_DATE_EPOCH, else the clock.
  std::function<std::string()> timestamp;
};

struct PipelineFailure {
  std::string stage;    // extract, prompt, llm, region
  std::string subject;  // image_id, structure_id or region name
  std::string kind;
  std::string message;

  bool operator==(const PipelineFailure&) const = default;
};

struct PipelineResult {
  std::vector<std::filesystem::path> outputs;  // relative to out_dir, write order
  std::vector<PipelineFailure> failures;
  std::size_t structure_reports = 0;
  bool region_report = false;

  bool ok() const { return failures.empty(); }
};

// Extraction failures stop the run before any report is written; the run
// manifest is still written.
class ExtractionFailedError : public Error {
 public:
  explicit ExtractionFailedError(std::vector<PipelineFailure> failures);
  const std::vector<PipelineFailure>& failures() const noexcept { return failures_; }

 private:
  std::vector<PipelineFailure> failures_;
};

// load -> extract -> merge -> per-structure prompt/complete/render -> region.
// A structure whose completion fails is skipped and recorded; the regional
// report then fails too. Writes reports/{structure_id}.md,
// reports/region_{name}.md, reports/region_{name}.geojson and
// run_manifest.json under out_dir.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks = {});

// Stable hash of every setting that affects outputs. The API key is never
// included, only the name of its environment variable.
std::string config_hash(const PipelineConfig& config);

// "YYYY-MM-DDTHH:MM:SSZ" from SOURCE_DATE_EPOCH when set, else now.
std::string utc_timestamp();

}  // namespace drs::report
