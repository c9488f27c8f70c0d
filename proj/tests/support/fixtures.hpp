#pragma once

#include <filesystem>

#include "drs/ingest.hpp"

namespace drs::testing {

inline std::filesystem::path fixture_dir() { return DRS_FIXTURE_DIR; }

inline DatasetPaths puerto_rico_paths() {
  const auto dir = fixture_dir() / "puerto_rico";
  return {dir / "event.json", dir / "structures.jsonl", dir / "observations.jsonl"};
}

inline std::filesystem::path puerto_rico_manifest() {
  return fixture_dir() / "puerto_rico" / "attributes_manifest.json";
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("drs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace drs::testing
