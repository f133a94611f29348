// SPDX-License-Identifier: MIT
/**
 * @file config.hpp
 * @brief Flat `key = value` run configuration (a TOML subset).
 *
 * Supported values: numbers, quoted strings, true/false and one-level arrays
 * of those. `#` starts a comment. Tables and nested arrays are rejected.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vispinn/loss.hpp"
#include "vispinn/training.hpp"

namespace vispinn {

struct ConfigValue {
  enum class Type { number, string, boolean, array };
  Type type = Type::number;
  double number = 0.0;
  std::string text;  // string payload, or the raw token for numbers
  bool boolean = false;
  std::vector<ConfigValue> items;
  int line = 0;
};

struct ConfigFile {
  std::string source = "<config>";
  std::map<std::string, ConfigValue> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
};

/// Throws `config` errors of the form "<source>:<line>: ...".
ConfigFile parse_config(const std::string& text, const std::string& source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

struct SamplingCase {
  int n = 0;
  int d = 0;
};

struct RunConfig {
  std::string operator_name;
  std::vector<int> arch;  // empty = (d, 32, 32, 1)
  std::vector<int> m_r{256};
  LossWeights weights;
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;
  int probe_resolution = 0;  // 0 = default for the dimension
  int mc_samples = 20000;
  int oracle_n = 512;
  std::string out = "out";
  // verify
  std::vector<SamplingCase> sampling{{16, 1}, {100, 1}, {100, 2}, {1024, 2}};
  int sampling_trials = 200;
  int ellipticity_trials = 1000;
  int bound_draws = 50;
  int comparison_pairs = 20;
  // report
  std::string weights_path;  // empty = <out>/weights.json
};

/// Validates keys and types; unknown keys and a missing `operator` are errors
/// naming the key and line.
RunConfig run_config_from(const ConfigFile& file);

}  // namespace vispinn
