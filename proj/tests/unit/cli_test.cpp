#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "drs/cli.hpp"
#include "fixtures.hpp"
#include "mock_server.hpp"

namespace drs::cli {
namespace {

using testing::MockServer;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run drs(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run(args, out, err, [env](const std::string& name) -> std::optional<std::string> {
    if (auto it = env.find(name); it != env.end()) {
      return it->second;
    }
    return std::nullopt;
  });
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> inputs(std::string command) {
  const auto p = testing::puerto_rico_paths();
  return {std::move(command), "--event", p.event.string(), "--structures", p.structures.string(),
          "--observations", p.observations.string()};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, HelpAndUsage) {
  auto r = drs({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("Exit codes"), std::string::npos) << r.out;
  EXPECT_EQ(drs({"report", "--help"}).code, kExitOk);
  EXPECT_EQ(drs({}).code, kExitUsage);
  EXPECT_EQ(drs({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(drs(inputs("validate") + std::vector<std::string>{"--bogus"}).code, kExitUsage);
  EXPECT_EQ(drs({"validate"}).code, kExitUsage);  // inputs missing
}

TEST(Cli, ValidateFixture) {
  const auto r = drs(inputs("validate"));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("0 error(s)"), std::string::npos) << r.out;
}

TEST(Cli, ValidateRejectsDanglingReference) {
  const auto dir = testing::scratch_dir("cli_validate");
  const auto p = testing::puerto_rico_paths();
  std::ofstream(dir / "obs.jsonl")
      << R"({"image_id": "a", "image_uri": "u", "structure_id": "ghost", "scope": "system"})"
      << "\n";
  const auto r = drs({"validate", "--event", p.event.string(), "--structures",
                      p.structures.string(), "--observations", (dir / "obs.jsonl").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.out.find("ghost"), std::string::npos) << r.out;
}

TEST(Cli, MissingInputFileIsValidationError) {
  const auto p = testing::puerto_rico_paths();
  const auto r = drs({"validate", "--event", "/nonexistent.json", "--structures",
                      p.structures.string(), "--observations", p.observations.string()});
  EXPECT_EQ(r.code, kExitValidation);
}

TEST(Cli, ExtractWritesObservations) {
  const auto out = testing::scratch_dir("cli_extract");
  const auto r = drs(inputs("extract") +
                     std::vector<std::string>{"--manifest", testing::puerto_rico_manifest().string(),
                                              "--out", out.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto text = slurp(out / "observations.jsonl");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 14);
}

TEST(Cli, ExtractFailureExitCode) {
  const auto out = testing::scratch_dir("cli_extract_fail");
  std::ofstream(out / "m.json") << "{}";
  const auto r = drs(inputs("extract") + std::vector<std::string>{"--manifest",
                                                                  (out / "m.json").string(),
                                                                  "--out", out.string()});
  EXPECT_EQ(r.code, kExitExtraction);
  EXPECT_NE(r.err.find("unknown_image"), std::string::npos) << r.err;
}

TEST(Cli, ReportOffline) {
  const auto out = testing::scratch_dir("cli_report");
  const auto r = drs(inputs("report") +
                     std::vector<std::string>{"--manifest", testing::puerto_rico_manifest().string(),
                                              "--out", out.string(), "--region", "Guayanilla",
                                              "--center", "17.9998,-66.6204", "--radius-km", "2"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out / "reports/region_Guayanilla.geojson"));
  EXPECT_TRUE(std::filesystem::exists(out / "run_manifest.json"));
}

TEST(Cli, RegionFlagsGoTogether) {
  const auto out = testing::scratch_dir("cli_region_flags");
  const auto base = inputs("report") + std::vector<std::string>{
                                           "--manifest", testing::puerto_rico_manifest().string(),
                                           "--out", out.string()};
  EXPECT_EQ(drs(base + std::vector<std::string>{"--region", "x"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--center", "1,2", "--radius-km", "1"}).code,
            kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--region", "x", "--center", "oops",
                                                "--radius-km", "1"})
                .code,
            kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--region", "x", "--center", "1,2",
                                                "--radius-km", "-1"})
                .code,
            kExitUsage);
  // Valid flags but nobody inside the radius.
  EXPECT_EQ(drs(base + std::vector<std::string>{"--region", "x", "--center", "0,0",
                                                "--radius-km", "1"})
                .code,
            kExitValidation);
}

TEST(Cli, BadNumbersAndEnums) {
  const auto out = testing::scratch_dir("cli_bad_numbers");
  const auto base = inputs("report") + std::vector<std::string>{
                                           "--manifest", testing::puerto_rico_manifest().string(),
                                           "--out", out.string()};
  EXPECT_EQ(drs(base + std::vector<std::string>{"--budget-tokens", "12"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--budget-tokens", "abc"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--temperature", "3"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--llm", "cloud"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--llm", "remote"}).code, kExitUsage);
  EXPECT_EQ(drs(base + std::vector<std::string>{"--templates", "/nonexistent"}).code, kExitUsage);
}

TEST(Cli, BudgetTooSmallForPromptIsLlmFailure) {
  const auto out = testing::scratch_dir("cli_budget");
  const auto r = drs(inputs("report") +
                     std::vector<std::string>{"--manifest", testing::puerto_rico_manifest().string(),
                                              "--out", out.string(), "--budget-tokens", "256"});
  EXPECT_EQ(r.code, kExitLlm);
  EXPECT_NE(r.err.find("budget"), std::string::npos) << r.err;
}

TEST(Cli, RemoteLlmWithoutKeyIsLlmFailure) {
  MockServer server({{200, testing::chat_body("x")}});
  const auto out = testing::scratch_dir("cli_no_key");
  const auto r = drs(inputs("report") +
                     std::vector<std::string>{"--manifest", testing::puerto_rico_manifest().string(),
                                              "--out", out.string(), "--llm", "remote",
                                              "--llm-model", "m"},
                     {{"DRS_LLM_BASE_URL", server.url()}});
  EXPECT_EQ(r.code, kExitLlm);
  EXPECT_NE(r.err.find("missing_api_key"), std::string::npos) << r.err;
  EXPECT_TRUE(server.requests().empty());
}

// Three extractor endpoints; whichever receives requests won the precedence.
struct Endpoints {
  MockServer config{{{200, R"({"material": "concrete"})"}}};
  MockServer env{{{200, R"({"material": "steel"})"}}};
  MockServer flag{{{200, R"({"material": "masonry"})"}}};
};

TEST(Cli, FlagBeatsEnvBeatsConfig) {
  Endpoints e;
  const auto out = testing::scratch_dir("cli_precedence");
  const auto toml = out / "drs.toml";
  std::ofstream(toml) << "extractor = \"remote\"\n[extract]\nextractor-url = \"" << e.config.url()
                      << "\"\n";
  const auto base = std::vector<std::string>{"--config", toml.string()} + inputs("extract") +
                    std::vector<std::string>{"--out", out.string()};

  EXPECT_EQ(drs(base).code, kExitOk);
  EXPECT_EQ(e.config.requests().size(), 10u);

  EXPECT_EQ(drs(base, {{"DRS_EXTRACTOR_URL", e.env.url()}}).code, kExitOk);
  EXPECT_EQ(e.env.requests().size(), 10u);
  EXPECT_EQ(e.config.requests().size(), 10u);

  EXPECT_EQ(drs(base + std::vector<std::string>{"--extractor-url", e.flag.url()},
                {{"DRS_EXTRACTOR_URL", e.env.url()}})
                .code,
            kExitOk);
  EXPECT_EQ(e.flag.requests().size(), 10u);
  EXPECT_EQ(e.env.requests().size(), 10u);
  EXPECT_NE(slurp(out / "observations.jsonl").find("masonry"), std::string::npos);
}

TEST(Cli, ConfigErrors) {
  const auto dir = testing::scratch_dir("cli_config_errors");
  const auto run_with = [&](const std::string& content) {
    std::ofstream(dir / "drs.toml", std::ios::trunc) << content;
    return drs(std::vector<std::string>{"--config", (dir / "drs.toml").string()} +
               inputs("validate"))
        .code;
  };
  EXPECT_EQ(run_with("colour = \"blue\"\n"), kExitUsage);
  EXPECT_EQ(run_with("[deploy]\nout = \"x\"\n"), kExitUsage);
  EXPECT_EQ(run_with("this is not toml ==\n"), kExitUsage);
  // Keys meant for other subcommands are ignored at the top level.
  EXPECT_EQ(run_with("llm = \"offline\"\n"), kExitOk);
  EXPECT_EQ(drs(std::vector<std::string>{"--config", (dir / "absent.toml").string()} +
                inputs("validate"))
                .code,
            kExitUsage);
}

}  // namespace
}  // namespace drs::cli
