// SPDX-License-Identifier: Apache-2.0
//
// Small helpers shared by the command-line tools: grid parsing, version
// strings, and deterministic manifest writing.
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "bip/csv.hpp"
#include "bip/errors.hpp"
#include "bip/experiments.hpp"

#include "json.hpp"

namespace bip::tools {

inline std::vector<std::size_t> parse_grid(const std::string& csv) {
  std::vector<std::size_t> grid;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string item =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (item.empty()) throw ConfigError("empty entry in grid list: " + csv);
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("grid entry is not a positive integer: " + item);
    }
    if (pos != item.size() || value == 0) {
      throw ConfigError("grid entry is not a positive integer: " + item);
    }
    grid.push_back(static_cast<std::size_t>(value));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return grid;
}

inline nlohmann::ordered_json version_block() {
  return {
      {"project", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
  };
}

// Hashes the named files (relative to `dir`) into manifest["artifacts"] and
// writes dir/manifest.json.  Called last so every artifact is final.
inline void write_manifest(const std::filesystem::path& dir,
                           nlohmann::ordered_json manifest,
                           std::vector<std::string> artifact_names) {
  manifest["versions"] = version_block();
  std::sort(artifact_names.begin(), artifact_names.end());
  nlohmann::ordered_json artifacts;
  for (const std::string& name : artifact_names) {
    artifacts[name] = file_hash_hex(dir / name);
  }
  manifest["artifacts"] = std::move(artifacts);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace bip::tools
