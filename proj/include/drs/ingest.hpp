#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drs/model.hpp"

namespace drs {

// The three canonical input files: event.json, structures.jsonl and
// observations.jsonl.
struct DatasetPaths {
  std::filesystem::path event;
  std::filesystem::path structures;
  std::filesystem::path observations;
};

struct Dataset {
  EventMetadata event;
  std::vector<StructureMetadata> structures;
  std::vector<ImageObservation> observations;

  bool operator==(const Dataset&) const = default;

  const StructureMetadata* find_structure(std::string_view structure_id) const;
};

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string record_ref;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  std::size_t error_count() const;
  std::size_t warning_count() const;
  // Accepted means free of error-severity issues; warnings never reject.
  bool accepted() const { return error_count() == 0; }
};

// Load failed because the dataset has error-severity issues.
class DatasetValidationError : public Error {
 public:
  explicit DatasetValidationError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

// Reads and schema-checks the three files without domain validation. Throws
// ParseError for missing files, malformed JSON, unknown keys, missing
// required keys or unknown enum labels; messages carry "file:line".
Dataset read_dataset(const DatasetPaths& paths);

// read_dataset followed by validate(). Throws DatasetValidationError when the
// report holds any error.
Dataset load_dataset(const DatasetPaths& paths);

// Reports every model invariant violation plus referential checks (duplicate
// ids, dangling structure references). Floors above the structure's story
// count and structures without observations are warnings.
ValidationReport validate(const Dataset& dataset);

// Groups observations by structure. Component observations are bucketed by
// floor (ascending) and ordered by (component_label, image_id) within each
// floor; system observations use the same ordering. One document per
// structure, in dataset order. Throws DatasetValidationError if the dataset
// does not validate.
std::vector<StructureDocument> merge_documents(const Dataset& dataset);

// All observations of a document: system first, then floors ascending.
std::vector<ImageObservation> flatten(const StructureDocument& document);

std::string format_report(const ValidationReport& report);

}  // namespace drs
