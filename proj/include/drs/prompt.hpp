#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drs/model.hpp"

namespace drs::prompt {

// Fragments every system message must contain exactly once.
inline constexpr std::string_view kTaskFragment =
    "Act as a domain expert in structural engineering and earthquake engineering working on a "
    "project of post-earthquake reconnaissance and structural health condition evaluation.";
inline constexpr std::string_view kTermsFragment =
    "Metadata: The general information of the event and the structures";
inline constexpr std::string_view kRulesFragment =
    "Make the tone formal, technical, and professional, and the generated summary in the form of "
    "a technical report.";

inline constexpr int kDefaultBudgetTokens = 8000;
inline constexpr int kMinBudgetTokens = 256;

struct PromptBundle {
  std::string system_message;
  std::string user_message;
  double temperature = 0.0;
  int max_output_tokens = 1500;

  bool operator==(const PromptBundle&) const = default;
};

// Three system-message fragments present exactly once, temperature in
// [0, 2], positive output budget.
std::vector<FieldIssue> check(const PromptBundle& bundle);

// Template assets: system_message.txt, structure_goal.txt, region_goal.txt.
// Placeholders use `{{name}}`.
struct Templates {
  std::string system_message;
  std::string structure_goal;  // {{structure_name}}, {{structure_id}}
  std::string region_goal;     // {{region_name}}, {{structure_count}}, {{radius_km}}, {{center}}

  // Copies of templates/*.txt compiled into the library.
  static const Templates& builtin();
  // Throws ParseError if a file is missing.
  static Templates from_directory(const std::filesystem::path& dir);
};

struct Options {
  int budget_tokens = kDefaultBudgetTokens;
  double temperature = 0.0;
  int max_output_tokens = 1500;
  const Templates* templates = nullptr;  // builtin when null

  const Templates& resolved_templates() const {
    return templates ? *templates : Templates::builtin();
  }
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

std::string build_system_message(const Options& options = {});

// Deterministic text block: [Event], [Structure metadata], then
// [System-level observations] and one [Floor n] section per floor with lines
// "Floor {n}, {label}: {attribute text}" and optional indented notes.
std::string serialize_document(const StructureDocument& doc);

PromptBundle build_structure_prompt(const StructureDocument& doc, const Options& options = {});

// `reports[i]` belongs to `region.member_ids[i]`; `structures` must contain
// every member (extra entries are ignored). Throws ValidationError on a count
// or membership mismatch.
PromptBundle build_region_prompt(const Region& region,
                                 std::span<const StructureMetadata> structures,
                                 std::span<const std::string> reports,
                                 const Options& options = {});

// Keeps text within ceil(chars / 4) <= budget_tokens. Reductions, in order:
// drop observation notes; collapse each observation section to one
// aggregate line ("Floor {n}: {k} observations, worst damage level {level}").
// Event and metadata sections are never touched; a notice line is appended
// when anything was removed. Throws BudgetError when budget_tokens < 256 or
// the text still does not fit.
std::string truncate_to_budget(std::string_view text, int budget_tokens);

// ---------------------------------------------------------------------------
// Reading user messages back. The offline backend summarizes from these.
// ---------------------------------------------------------------------------

struct ObservationLine {
  std::optional<int> floor;  // absent for system-level lines
  std::string label;
  AttributeSet attributes;
  std::optional<std::string> note;
};

// A floor (or the system section, floor absent) condensed by truncation.
struct CondensedSection {
  std::optional<int> floor;
  int observation_count = 0;
  std::optional<DamageLevel> worst_level;
};

using Fields = std::vector<std::pair<std::string, std::string>>;

struct StructurePayload {
  Fields event;
  Fields metadata;
  std::vector<ObservationLine> observations;  // document order
  std::vector<CondensedSection> condensed;
  bool truncated = false;

  // Value of a field by label, or nullopt.
  static std::optional<std::string> find(const Fields& fields, std::string_view label);
};

struct RegionMember {
  std::string structure_id;
  std::string name;
  std::string report;
};

struct RegionPayload {
  Fields region;
  std::vector<RegionMember> members;
};

class PayloadError : public Error {
 public:
  using Error::Error;
};

// Throws PayloadError when the message was not produced by this module.
std::variant<StructurePayload, RegionPayload> parse_user_message(std::string_view user_message);

}  // namespace drs::prompt
