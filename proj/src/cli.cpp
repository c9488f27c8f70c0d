#include "drs/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "drs/dms.hpp"
#include "drs/extract.hpp"
#include "drs/ingest.hpp"
#include "drs/llm.hpp"
#include "drs/log.hpp"
#include "drs/records.hpp"
#include "drs/report.hpp"

namespace drs::cli {
namespace {

constexpr std::string_view kDefaultConfigFile = "drs.toml";

struct OptionSpec {
  std::string name;  // long flag without the leading dashes
  std::string help;
  std::optional<std::string> env;
};

const std::vector<OptionSpec>& input_specs() {
  static const std::vector<OptionSpec> specs{
      {"event", "Event record (event.json)", {}},
      {"structures", "Structure records, one per line (structures.jsonl)", {}},
      {"observations", "Image observations, one per line (observations.jsonl)", {}},
  };
  return specs;
}

const std::vector<OptionSpec>& extractor_specs() {
  static const std::vector<OptionSpec> specs{
      {"out", "Output directory", {}},
      {"extractor", "Attribute extractor: manifest or remote (default manifest)", {}},
      {"manifest", "attributes_manifest.json for the manifest extractor", {}},
      {"extractor-url", "Base URL of the remote extractor", "DRS_EXTRACTOR_URL"},
      {"extractor-timeout-ms", "Remote extractor request timeout (default 10000)", {}},
      {"extractor-retries", "Remote extractor retries (default 2)", {}},
      {"max-in-flight", "Concurrent remote extractor requests (default 4)", {}},
  };
  return specs;
}

const std::vector<OptionSpec>& report_specs() {
  static const std::vector<OptionSpec> specs{
      {"llm", "Report backend: offline or remote (default offline)", {}},
      {"llm-base-url", "Base URL of the chat-completion service", "DRS_LLM_BASE_URL"},
      {"llm-model", "Model name sent to the chat-completion service", {}},
      {"llm-api-key-env", "Environment variable holding the API key (default DRS_LLM_API_KEY)", {}},
      {"llm-timeout-ms", "Chat-completion request timeout (default 60000)", {}},
      {"llm-retries", "Chat-completion retries (default 3)", {}},
      {"llm-concurrency", "Concurrent chat-completion requests (default 2)", {}},
      {"region", "Region name; requires --center and --radius-km", {}},
      {"center", "Region center as \"lat,lon\" or a DMS pair", {}},
      {"radius-km", "Region radius in kilometres", {}},
      {"budget-tokens", "User-message token budget (default 8000, minimum 256)", {}},
      {"temperature", "Sampling temperature (default 0)", {}},
      {"max-output-tokens", "Completion length limit (default 1500)", {}},
      {"templates", "Directory overriding the built-in prompt templates", {}},
  };
  return specs;
}

class Settings {
 public:
  Settings(std::string subcommand, const Getenv& getenv)
      : subcommand_(std::move(subcommand)), getenv_(getenv) {}

  void bind(CLI::App& app, const OptionSpec& spec) {
    auto* opt = app.add_option("--" + spec.name, flags_[spec.name], spec.help);
    if (spec.env) {
      opt->option_text(fmt::format("TEXT (env: {})", *spec.env));
    }
    specs_.emplace(spec.name, spec);
  }

  void load_config(const std::optional<std::string>& explicit_path) {
    std::string path;
    if (explicit_path) {
      if (!std::filesystem::is_regular_file(*explicit_path)) {
        throw UsageError(fmt::format("--config: {} does not exist", *explicit_path));
      }
      path = *explicit_path;
    } else if (std::filesystem::is_regular_file(kDefaultConfigFile)) {
      path = std::string(kDefaultConfigFile);
    } else {
      return;
    }
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::Error& e) {
      throw UsageError(fmt::format("{}: {}", path, e.what()));
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") {
        continue;  // section markers
      }
      const bool top_level = item.parents.empty();
      if (!top_level) {
        const auto& section = item.parents.front();
        if (item.parents.size() > 1 ||
            (section != "validate" && section != "extract" && section != "report")) {
          throw UsageError(fmt::format("{}: unknown section for \"{}\"", path, item.fullname()));
        }
        if (section != subcommand_) {
          continue;
        }
      }
      if (!specs_.contains(item.name)) {
        if (top_level && known_anywhere(item.name)) {
          continue;  // meant for another subcommand
        }
        throw UsageError(fmt::format("{}: unknown key \"{}\"", path, item.fullname()));
      }
      if (item.inputs.size() != 1) {
        throw UsageError(fmt::format("{}: \"{}\" must hold a single value", path, item.name));
      }
      // A subcommand section overrides a top-level key.
      if (!top_level || !config_.contains(item.name)) {
        config_[item.name] = item.inputs.front();
      }
    }
  }

  std::optional<std::string> get(const std::string& name) const {
    if (auto it = flags_.find(name); it != flags_.end() && it->second) {
      return it->second;
    }
    const auto& spec = specs_.at(name);
    if (spec.env) {
      if (auto value = getenv_(*spec.env); value && !value->empty()) {
        return value;
      }
    }
    if (auto it = config_.find(name); it != config_.end()) {
      return it->second;
    }
    return std::nullopt;
  }

  std::string require(const std::string& name) const {
    auto value = get(name);
    if (!value || value->empty()) {
      throw UsageError(fmt::format("--{} is required", name));
    }
    return *value;
  }

  int get_int(const std::string& name, int fallback, int minimum) const {
    auto value = get(name);
    if (!value) {
      return fallback;
    }
    int parsed = 0;
    const auto* end = value->data() + value->size();
    auto [ptr, ec] = std::from_chars(value->data(), end, parsed);
    if (ec != std::errc() || ptr != end) {
      throw UsageError(fmt::format("--{}: \"{}\" is not an integer", name, *value));
    }
    if (parsed < minimum) {
      throw UsageError(fmt::format("--{}: must be at least {}", name, minimum));
    }
    return parsed;
  }

  std::optional<double> get_double(const std::string& name) const {
    auto value = get(name);
    if (!value) {
      return std::nullopt;
    }
    try {
      std::size_t used = 0;
      const double parsed = std::stod(*value, &used);
      if (used == value->size() && std::isfinite(parsed)) {
        return parsed;
      }
    } catch (const std::exception&) {
    }
    throw UsageError(fmt::format("--{}: \"{}\" is not a number", name, *value));
  }

  template <typename E>
  E get_enum(const std::string& name, E fallback) const {
    auto value = get(name);
    if (!value) {
      return fallback;
    }
    if (auto parsed = from_label<E>(*value)) {
      return *parsed;
    }
    std::vector<std::string_view> allowed(EnumLabels<E>::names.begin(),
                                          EnumLabels<E>::names.end());
    throw UsageError(fmt::format("--{}: \"{}\" is not one of {}", name, *value,
                                 fmt::join(allowed, ", ")));
  }

 private:
  static bool known_anywhere(const std::string& name) {
    for (const auto* list : {&input_specs(), &extractor_specs(), &report_specs()}) {
      for (const auto& spec : *list) {
        if (spec.name == name) {
          return true;
        }
      }
    }
    return false;
  }

  std::string subcommand_;
  const Getenv& getenv_;
  std::map<std::string, std::optional<std::string>> flags_;
  std::map<std::string, OptionSpec> specs_;
  std::map<std::string, std::string> config_;
};

bool quiet() { return log::verbosity().load() == log::Verbosity::quiet; }

DatasetPaths input_paths(const Settings& s) {
  return {s.require("event"), s.require("structures"), s.require("observations")};
}

ExtractorBackendConfig extractor_config(const Settings& s) {
  ExtractorBackendConfig c;
  c.kind = s.get_enum("extractor", ExtractorKind::manifest);
  if (auto path = s.get("manifest")) {
    c.manifest_path = *path;
  }
  c.endpoint_url = s.get("extractor-url");
  c.timeout_ms = s.get_int("extractor-timeout-ms", c.timeout_ms, 1);
  c.max_retries = s.get_int("extractor-retries", c.max_retries, 0);
  c.max_in_flight = s.get_int("max-in-flight", c.max_in_flight, 1);
  if (auto issues = check(c); !issues.empty()) {
    throw UsageError(fmt::format("extractor {}: {}", issues.front().field, issues.front().message));
  }
  return c;
}

llm::LlmBackendConfig llm_config(const Settings& s) {
  llm::LlmBackendConfig c;
  c.kind = s.get_enum("llm", llm::BackendKind::offline);
  c.base_url = s.get("llm-base-url");
  c.model_name = s.get("llm-model");
  if (auto env = s.get("llm-api-key-env")) {
    c.api_key_env_var = *env;
  }
  c.timeout_ms = s.get_int("llm-timeout-ms", c.timeout_ms, 1);
  c.max_retries = s.get_int("llm-retries", c.max_retries, 0);
  if (auto issues = check(c); !issues.empty()) {
    throw UsageError(fmt::format("llm {}: {}", issues.front().field, issues.front().message));
  }
  return c;
}

std::optional<report::RegionSpec> region_spec(const Settings& s) {
  const auto name = s.get("region");
  const auto center = s.get("center");
  const auto radius = s.get_double("radius-km");
  if (!name && !center && !radius) {
    return std::nullopt;
  }
  if (!name) {
    throw UsageError("--center and --radius-km require --region");
  }
  if (!center || !radius) {
    throw UsageError("--region requires --center and --radius-km");
  }
  if (*radius < 0.0) {
    throw UsageError("--radius-km: must be non-negative");
  }
  report::RegionSpec spec{*name, {}, *radius};
  try {
    spec.center = parse_coordinate_pair(*center);
    require_valid(spec.center);
  } catch (const Error& e) {
    throw UsageError(fmt::format("--center: {}", e.what()));
  }
  if (name->empty()) {
    throw UsageError("--region: must be non-empty");
  }
  return spec;
}

void write_observations(const std::filesystem::path& path, const Dataset& dataset) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& o : dataset.observations) {
    out << records::to_json(o).dump() << '\n';
  }
  if (!out) {
    throw Error(fmt::format("{}: cannot write file", path.string()));
  }
}

int print_extraction_failures(std::ostream& err, const std::vector<report::PipelineFailure>& fs) {
  for (const auto& f : fs) {
    err << fmt::format("error: extraction failed for {} ({}): {}\n", f.subject, f.kind, f.message);
  }
  return kExitExtraction;
}

int cmd_validate(const Settings& s, std::ostream& out) {
  const auto dataset = read_dataset(input_paths(s));
  const auto report = validate(dataset);
  out << format_report(report);
  return report.accepted() ? kExitOk : kExitValidation;
}

int cmd_extract(const Settings& s, std::ostream& out, std::ostream& err) {
  const auto paths = input_paths(s);
  const std::filesystem::path out_dir = s.require("out");
  const auto config = extractor_config(s);
  const auto dataset = load_dataset(paths);
  const auto outcome = extract_all(config, dataset);
  const auto target = out_dir / "observations.jsonl";
  write_observations(target, outcome.dataset);
  if (!quiet()) {
    out << fmt::format("wrote {} observation(s) to {}\n", outcome.dataset.observations.size(),
                       target.string());
  }
  if (!outcome.ok()) {
    std::vector<report::PipelineFailure> failures;
    for (const auto& f : outcome.failures) {
      failures.push_back({"extract", f.image_id, std::string(to_string(f.kind)), f.message});
    }
    return print_extraction_failures(err, failures);
  }
  return kExitOk;
}

int cmd_report(const Settings& s, std::ostream& out, std::ostream& err, const Getenv& getenv) {
  report::PipelineConfig config;
  config.inputs = input_paths(s);
  config.out_dir = s.require("out");
  config.extractor = extractor_config(s);
  config.llm = llm_config(s);
  config.region = region_spec(s);
  config.prompt.budget_tokens =
      s.get_int("budget-tokens", prompt::kDefaultBudgetTokens, prompt::kMinBudgetTokens);
  config.prompt.temperature = s.get_double("temperature").value_or(0.0);
  if (config.prompt.temperature < 0.0 || config.prompt.temperature > 2.0) {
    throw UsageError("--temperature: must lie in [0, 2]");
  }
  config.prompt.max_output_tokens =
      s.get_int("max-output-tokens", config.prompt.max_output_tokens, 1);
  std::optional<prompt::Templates> templates;
  if (auto dir = s.get("templates")) {
    try {
      templates = prompt::Templates::from_directory(*dir);
    } catch (const ParseError& e) {
      throw UsageError(fmt::format("--templates: {}", e.what()));
    }
    config.prompt.templates = &*templates;
  }
  llm::remote_limiter().set_limit(s.get_int("llm-concurrency", 2, 1));

  report::PipelineHooks hooks;
  hooks.completion.getenv = getenv;
  report::PipelineResult result;
  try {
    result = report::run_pipeline(config, hooks);
  } catch (const report::ExtractionFailedError& e) {
    return print_extraction_failures(err, e.failures());
  }
  if (!quiet()) {
    out << fmt::format("wrote {} file(s) to {}\n", result.outputs.size(),
                       config.out_dir.string());
    for (const auto& rel : result.outputs) {
      out << "  " << rel.generic_string() << '\n';
    }
  }
  for (const auto& f : result.failures) {
    err << fmt::format("error: {} failed for {} ({}): {}\n", f.stage, f.subject, f.kind,
                       f.message);
  }
  return result.ok() ? kExitOk : kExitLlm;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Getenv& getenv_hook) {
  const Getenv getenv = getenv_hook ? getenv_hook : [](const std::string& name) {
    const char* value = std::getenv(name.c_str());
    return value ? std::optional<std::string>(value) : std::nullopt;
  };

  CLI::App app{"Post-disaster structural reconnaissance report generator", "drs"};
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  std::optional<std::string> config_path;
  app.add_flag("-q,--quiet", quiet, "Print errors only");
  app.add_flag("-v,--verbose", verbose, "Print debug diagnostics");
  app.add_option("--config", config_path, "Config file (default ./drs.toml when present)");
  app.footer(
      "Exit codes: 0 success, 1 validation errors, 2 extraction failures, 3 LLM/backend "
      "failures, 4 usage errors.\nSettings resolve as flag, then environment variable, then "
      "config file.");

  auto* validate_cmd = app.add_subcommand("validate", "Check the input dataset and list issues");
  auto* extract_cmd =
      app.add_subcommand("extract", "Fill image attributes and write OUT/observations.jsonl");
  auto* report_cmd = app.add_subcommand("report", "Generate structure and regional reports");

  std::map<std::string, Settings> settings;
  for (auto* cmd : {validate_cmd, extract_cmd, report_cmd}) {
    auto& s = settings.try_emplace(cmd->get_name(), cmd->get_name(), getenv).first->second;
    for (const auto& spec : input_specs()) {
      s.bind(*cmd, spec);
    }
    if (cmd != validate_cmd) {
      for (const auto& spec : extractor_specs()) {
        s.bind(*cmd, spec);
      }
    }
    if (cmd == report_cmd) {
      for (const auto& spec : report_specs()) {
        s.bind(*cmd, spec);
      }
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  log::set_verbosity(quiet     ? log::Verbosity::quiet
                     : verbose ? log::Verbosity::verbose
                               : log::Verbosity::normal);

  CLI::App* chosen = app.get_subcommands().front();
  auto& s = settings.at(chosen->get_name());
  try {
    s.load_config(config_path);
    if (chosen == validate_cmd) {
      return cmd_validate(s, out);
    }
    if (chosen == extract_cmd) {
      return cmd_extract(s, out, err);
    }
    return cmd_report(s, out, err, getenv);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const DatasetValidationError& e) {
    err << format_report(e.report());
    err << "error: the dataset has validation errors\n";
    return kExitValidation;
  } catch (const ExtractionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitExtraction;
  } catch (const llm::LlmError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLlm;
  } catch (const prompt::BudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLlm;
  } catch (const Error& e) {
    // Parse errors in inputs, empty regions and other invariant violations.
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace drs::cli
