#include "drs/extract.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "drs/records.hpp"

namespace drs {
namespace {

using records::Json;

constexpr std::string_view kUnavailable = "attributes unavailable";
constexpr std::string_view kLevelSuffix = " damage level";
constexpr std::string_view kTypeSuffix = " damage type";

constexpr std::array<std::string_view, 4> kMaterialWords{"concrete", "steel", "masonry",
                                                         "other material"};
constexpr std::array<std::string_view, 5> kComponentWords{"beam", "column", "wall", "joint",
                                                          "other component"};
constexpr std::array<std::string_view, 2> kStateWords{"undamaged", "damaged"};
constexpr std::array<std::string_view, 2> kSpallingWords{"no spalling observed",
                                                         "spalling observed"};
constexpr std::array<std::string_view, 3> kCollapseWords{"non-collapse", "partial collapse",
                                                         "global collapse"};

template <typename E, std::size_t N>
std::optional<E> match_word(const std::array<std::string_view, N>& words, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (words[i] == text) {
      return static_cast<E>(i);
    }
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view word(const std::array<std::string_view, N>& words, E value) {
  return words[static_cast<std::size_t>(value)];
}

// Leading "{material} {component}" segment, either part optional.
bool parse_subject(std::string_view text, AttributeSet& out) {
  if (auto component = match_word<ComponentType>(kComponentWords, text)) {
    out.component_type = component;
    return true;
  }
  for (std::size_t i = 0; i < kMaterialWords.size(); ++i) {
    const auto m = kMaterialWords[i];
    if (!text.starts_with(m)) {
      continue;
    }
    const auto rest = text.substr(m.size());
    if (rest.empty()) {
      out.material = static_cast<Material>(i);
      return true;
    }
    if (rest.front() == ' ') {
      if (auto component = match_word<ComponentType>(kComponentWords, rest.substr(1))) {
        out.material = static_cast<Material>(i);
        out.component_type = component;
        return true;
      }
    }
  }
  return false;
}

std::string extraction_order_key(const ImageObservation& o) {
  // floor 0 sorts system observations ahead of every story.
  return fmt::format("{:010d}\x1f{}\x1f{}", o.floor.value_or(0), o.component_label.value_or(""),
                     o.image_id);
}

AttributeSet checked_attributes(const Json& j, const std::string& image_id,
                                std::string_view source) {
  AttributeSet attributes;
  try {
    attributes = records::attributes_from_json(j, source);
  } catch (const ParseError& e) {
    throw ExtractionError(ExtractionError::Kind::protocol, image_id, e.what());
  }
  auto issues = check(attributes);
  if (!issues.empty()) {
    throw ExtractionError(ExtractionError::Kind::protocol, image_id,
                          fmt::format("{}: inconsistent attributes for \"{}\": {}: {}", source,
                                      image_id, issues.front().field, issues.front().message));
  }
  return attributes;
}

}  // namespace

std::string_view to_string(ExtractionError::Kind kind) {
  switch (kind) {
    case ExtractionError::Kind::unknown_image: return "unknown_image";
    case ExtractionError::Kind::unreachable: return "unreachable";
    case ExtractionError::Kind::protocol: return "protocol";
  }
  return "unknown";
}

std::vector<FieldIssue> check(const ExtractorBackendConfig& config) {
  std::vector<FieldIssue> issues;
  if (config.kind == ExtractorKind::manifest && !config.manifest_path) {
    issues.push_back({"manifest_path", "required for the manifest extractor"});
  }
  if (config.kind == ExtractorKind::remote && (!config.endpoint_url || config.endpoint_url->empty())) {
    issues.push_back({"endpoint_url", "required for the remote extractor"});
  }
  if (config.timeout_ms <= 0) {
    issues.push_back({"timeout_ms", "must be positive"});
  }
  if (config.max_retries < 0) {
    issues.push_back({"max_retries", "must be non-negative"});
  }
  if (config.max_in_flight < 1) {
    issues.push_back({"max_in_flight", "must be >= 1"});
  }
  return issues;
}

ManifestExtractor::ManifestExtractor(std::map<std::string, AttributeSet, std::less<>> entries)
    : entries_(std::move(entries)) {}

ManifestExtractor ManifestExtractor::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(fmt::format("cannot open attribute manifest \"{}\"", path.string()));
  }
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed JSON: {}", path.filename().string(), e.what()));
  }
  if (!root.is_object()) {
    throw ParseError(fmt::format("{}: expected an object keyed by image_id",
                                 path.filename().string()));
  }
  std::map<std::string, AttributeSet, std::less<>> entries;
  for (const auto& [image_id, record] : root.items()) {
    const auto context = fmt::format("{}: \"{}\"", path.filename().string(), image_id);
    auto attributes = records::attributes_from_json(record, context);
    auto issues = check(attributes);
    if (!issues.empty()) {
      throw ParseError(fmt::format("{}: {}: {}", context, issues.front().field,
                                   issues.front().message));
    }
    entries.emplace(image_id, attributes);
  }
  return ManifestExtractor(std::move(entries));
}

AttributeSet ManifestExtractor::extract(const ImageObservation& observation) const {
  auto it = entries_.find(observation.image_id);
  if (it == entries_.end()) {
    throw ExtractionError(ExtractionError::Kind::unknown_image, observation.image_id,
                          fmt::format("image \"{}\" is not in the attribute manifest",
                                      observation.image_id));
  }
  return it->second;
}

RemoteExtractor::RemoteExtractor(ExtractorBackendConfig config, http::RetryHooks hooks,
                                 http::Backoff backoff)
    : config_(std::move(config)), hooks_(std::move(hooks)), backoff_(backoff) {
  require_valid(config_);
}

AttributeSet RemoteExtractor::extract(const ImageObservation& observation) const {
  const auto url = http::join_url(*config_.endpoint_url, "/extract");
  Json request;
  request["image_id"] = observation.image_id;
  request["image_uri"] = observation.image_uri;
  const auto body = request.dump();
  const auto& id = observation.image_id;

  std::string last_problem;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      hooks_.sleep(backoff_.delay(attempt - 1, hooks_.unit_draw()));
    }
    const auto result =
        http::post_json(url, body, {}, std::chrono::milliseconds(config_.timeout_ms));
    if (result.transport != http::Transport::ok) {
      last_problem = result.transport_message;
      continue;
    }
    if (result.status == 200) {
      Json payload;
      try {
        payload = Json::parse(result.body);
      } catch (const Json::parse_error& e) {
        throw ExtractionError(ExtractionError::Kind::protocol, id,
                              fmt::format("extractor returned malformed JSON for \"{}\": {}", id,
                                          e.what()));
      }
      return checked_attributes(payload, id, "extractor response");
    }
    if (result.status == 404) {
      throw ExtractionError(ExtractionError::Kind::unknown_image, id,
                            fmt::format("extractor does not know image \"{}\"", id));
    }
    if (result.status == 429 || result.status >= 500) {
      last_problem = fmt::format("HTTP {}", result.status);
      continue;
    }
    throw ExtractionError(ExtractionError::Kind::protocol, id,
                          fmt::format("extractor rejected request for \"{}\" with HTTP {}", id,
                                      result.status));
  }
  throw ExtractionError(ExtractionError::Kind::unreachable, id,
                        fmt::format("extractor unreachable for \"{}\" after {} attempt(s): {}", id,
                                    config_.max_retries + 1, last_problem));
}

std::unique_ptr<AttributeExtractor> make_extractor(const ExtractorBackendConfig& config,
                                                   http::RetryHooks hooks) {
  require_valid(config);
  if (config.kind == ExtractorKind::manifest) {
    return std::make_unique<ManifestExtractor>(ManifestExtractor::from_file(*config.manifest_path));
  }
  return std::make_unique<RemoteExtractor>(config, std::move(hooks));
}

AttributeSet extract_attributes(const ExtractorBackendConfig& config,
                                const ImageObservation& observation) {
  return make_extractor(config)->extract(observation);
}

ExtractionOutcome extract_all(const AttributeExtractor& extractor, const Dataset& dataset) {
  auto report = validate(dataset);
  if (!report.accepted()) {
    throw DatasetValidationError(std::move(report));
  }

  ExtractionOutcome outcome{dataset, {}};
  auto& observations = outcome.dataset.observations;

  std::map<std::string, std::size_t, std::less<>> structure_rank;
  for (std::size_t i = 0; i < dataset.structures.size(); ++i) {
    structure_rank.emplace(dataset.structures[i].structure_id, i);
  }
  std::vector<std::pair<std::string, std::size_t>> order;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    if (o.attributes) {
      continue;
    }
    order.emplace_back(fmt::format("{:010d}\x1e{}", structure_rank.at(o.structure_id),
                                   extraction_order_key(o)),
                       i);
  }
  std::sort(order.begin(), order.end());

  std::vector<std::optional<ExtractionFailure>> failures(order.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto k = next.fetch_add(1); k < order.size(); k = next.fetch_add(1)) {
      auto& o = observations[order[k].second];
      try {
        o.attributes = extractor.extract(o);
      } catch (const ExtractionError& e) {
        failures[k] = ExtractionFailure{o.image_id, e.kind(), e.what()};
      }
    }
  };

  const auto threads = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(1, extractor.max_concurrency())), order.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  for (auto& f : failures) {
    if (f) {
      outcome.failures.push_back(std::move(*f));
    }
  }
  return outcome;
}

ExtractionOutcome extract_all(const ExtractorBackendConfig& config, const Dataset& dataset) {
  return extract_all(*make_extractor(config), dataset);
}

std::string render_attribute_text(const AttributeSet& a) {
  if (a.empty()) {
    return std::string(kUnavailable);
  }
  std::vector<std::string> parts;
  if (a.material || a.component_type) {
    std::string subject;
    if (a.material) {
      subject = word(kMaterialWords, *a.material);
    }
    if (a.component_type) {
      subject += subject.empty() ? "" : " ";
      subject += word(kComponentWords, *a.component_type);
    }
    parts.push_back(std::move(subject));
  }
  if (a.damage_state) {
    parts.emplace_back(word(kStateWords, *a.damage_state));
  }
  if (a.damage_level) {
    parts.push_back(std::string(to_label(*a.damage_level)) + std::string(kLevelSuffix));
  }
  if (a.spalling) {
    parts.emplace_back(word(kSpallingWords, *a.spalling));
  }
  if (a.damage_type) {
    parts.push_back(std::string(to_label(*a.damage_type)) + std::string(kTypeSuffix));
  }
  if (a.collapse_mode) {
    parts.emplace_back(word(kCollapseWords, *a.collapse_mode));
  }

  std::string out;
  for (const auto& p : parts) {
    out += out.empty() ? "" : ", ";
    out += p;
  }
  return out;
}

std::optional<AttributeSet> parse_attribute_text(std::string_view text) {
  AttributeSet out;
  if (text == kUnavailable) {
    return out;
  }
  if (text.empty()) {
    return std::nullopt;
  }

  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    const auto comma = text.find(", ", start);
    parts.push_back(text.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 2;
  }

  // Slots in canonical order; each segment must land strictly after the last.
  int last_slot = -1;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto p = parts[i];
    int slot = -1;
    if (auto s = match_word<DamageState>(kStateWords, p)) {
      out.damage_state = s;
      slot = 1;
    } else if (p.ends_with(kLevelSuffix)) {
      out.damage_level = from_label<DamageLevel>(p.substr(0, p.size() - kLevelSuffix.size()));
      slot = out.damage_level ? 2 : -1;
    } else if (auto s = match_word<Spalling>(kSpallingWords, p)) {
      out.spalling = s;
      slot = 3;
    } else if (p.ends_with(kTypeSuffix)) {
      out.damage_type = from_label<DamageType>(p.substr(0, p.size() - kTypeSuffix.size()));
      slot = out.damage_type ? 4 : -1;
    } else if (auto c = match_word<CollapseMode>(kCollapseWords, p)) {
      out.collapse_mode = c;
      slot = 5;
    } else if (i == 0 && parse_subject(p, out)) {
      slot = 0;
    }
    if (slot <= last_slot) {
      return std::nullopt;
    }
    last_slot = slot;
  }
  return out;
}

}  // namespace drs
