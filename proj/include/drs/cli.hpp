#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace drs::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitExtraction = 2,
  kExitLlm = 3,
  kExitUsage = 4,
};

using Getenv = std::function<std::optional<std::string>(const std::string&)>;

// Runs `drs` with `args` (program name excluded). Settings resolve as
// flag, then environment variable, then config file (--config, or
// ./drs.toml when present). `getenv` defaults to the process environment.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Getenv& getenv = {});

}  // namespace drs::cli
