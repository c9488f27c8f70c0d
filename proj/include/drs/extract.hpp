#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drs/http.hpp"
#include "drs/ingest.hpp"
#include "drs/model.hpp"

namespace drs {

enum class ExtractorKind { manifest, remote };

template <>
struct EnumLabels<ExtractorKind> {
  static constexpr std::array<std::string_view, 2> names{"manifest", "remote"};
};

struct ExtractorBackendConfig {
  ExtractorKind kind = ExtractorKind::manifest;
  std::optional<std::filesystem::path> manifest_path;
  std::optional<std::string> endpoint_url;
  int timeout_ms = 10000;
  int max_retries = 2;
  int max_in_flight = 4;  // remote only
};

std::vector<FieldIssue> check(const ExtractorBackendConfig& config);

class ExtractionError : public Error {
 public:
  enum class Kind { unknown_image, unreachable, protocol };

  ExtractionError(Kind kind, std::string image_id, const std::string& message)
      : Error(message), kind_(kind), image_id_(std::move(image_id)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& image_id() const noexcept { return image_id_; }

 private:
  Kind kind_;
  std::string image_id_;
};

std::string_view to_string(ExtractionError::Kind kind);

// Source of structural attributes for one image. Implementations must be
// safe to call concurrently.
class AttributeExtractor {
 public:
  virtual ~AttributeExtractor() = default;
  virtual AttributeSet extract(const ImageObservation& observation) const = 0;
  virtual int max_concurrency() const { return 1; }
};

// Serves precomputed labels from attributes_manifest.json, a JSON object
// mapping image_id to an AttributeSet record.
class ManifestExtractor final : public AttributeExtractor {
 public:
  explicit ManifestExtractor(std::map<std::string, AttributeSet, std::less<>> entries);
  static ManifestExtractor from_file(const std::filesystem::path& path);

  AttributeSet extract(const ImageObservation& observation) const override;
  const std::map<std::string, AttributeSet, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, AttributeSet, std::less<>> entries_;
};

// Calls POST {endpoint_url}/extract with {"image_id", "image_uri"}. Retries
// 429/5xx and transport failures with exponential backoff; 404 maps to
// unknown_image, 422 and out-of-vocabulary labels to protocol errors.
class RemoteExtractor final : public AttributeExtractor {
 public:
  explicit RemoteExtractor(ExtractorBackendConfig config,
                           http::RetryHooks hooks = http::RetryHooks::system(),
                           http::Backoff backoff = {});

  AttributeSet extract(const ImageObservation& observation) const override;
  int max_concurrency() const override { return config_.max_in_flight; }

 private:
  ExtractorBackendConfig config_;
  http::RetryHooks hooks_;
  http::Backoff backoff_;
};

// Throws ValidationError for an inconsistent config.
std::unique_ptr<AttributeExtractor> make_extractor(
    const ExtractorBackendConfig& config, http::RetryHooks hooks = http::RetryHooks::system());

AttributeSet extract_attributes(const ExtractorBackendConfig& config,
                                const ImageObservation& observation);

struct ExtractionFailure {
  std::string image_id;
  ExtractionError::Kind kind;
  std::string message;

  bool operator==(const ExtractionFailure&) const = default;
};

struct ExtractionOutcome {
  Dataset dataset;
  std::vector<ExtractionFailure> failures;

  bool ok() const { return failures.empty(); }
};

// Fills attributes for every observation that lacks them; observations that
// already carry attributes are untouched. Work is dispatched in (structure,
// floor, component_label, image_id) order and failures are reported in that
// order; partial results are kept. Throws DatasetValidationError if the
// dataset does not validate.
ExtractionOutcome extract_all(const AttributeExtractor& extractor, const Dataset& dataset);
ExtractionOutcome extract_all(const ExtractorBackendConfig& config, const Dataset& dataset);

// Canonical text form, comma-joined in the order material, component_type,
// damage_state, damage_level, spalling, damage_type, collapse_mode, e.g.
// "concrete column, damaged, heavy damage level, spalling observed,
// combined damage type". An empty set renders as "attributes unavailable".
std::string render_attribute_text(const AttributeSet& attributes);

// Exact inverse of render_attribute_text; nullopt for any other text.
std::optional<AttributeSet> parse_attribute_text(std::string_view text);

}  // namespace drs
