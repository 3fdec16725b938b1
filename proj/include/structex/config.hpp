// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: flat "key = value" text, '#' comments, and
// "include = other.conf" lines spliced in place. Later assignments win, and
// command-line overrides are applied last. Relative paths are resolved
// against the directory of the file that names them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "structex/backend.hpp"
#include "structex/corpus.hpp"
#include "structex/explanation.hpp"
#include "structex/learn.hpp"

namespace structex::config {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view source = "<memory>");
KeyValues load_config_file(const std::filesystem::path& path);

// "key=value"; path values resolve against `base_dir`.
void apply_override(KeyValues& kv, std::string_view assignment, const std::filesystem::path& base_dir);
void set_value(KeyValues& kv, const std::string& key, const std::string& value, const std::filesystem::path& base_dir);

bool is_known_key(std::string_view key);
bool is_path_key(std::string_view key);

struct BackendSpec {
  enum class Kind { kScripted, kRemote } kind = Kind::kScripted;
  std::filesystem::path script;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path corpus;
  std::filesystem::path prices;
  std::filesystem::path templates;  // empty: compiled-in defaults
  std::filesystem::path output_dir;
  std::optional<BackendSpec> backend;
  backend::RemoteConfig remote;

  int horizon_days = 30;
  corpus::Thresholds thresholds;
  std::size_t per_sector = 100;
  Date test_after{std::chrono::year{2024}, std::chrono::January, std::chrono::day{1}};

  double tau = 0.02;
  std::size_t lookback = 4;

  explanation::FactRange fact_range;
  int max_reflections = 4;
  int max_retries = 2;
  bool enforce_distinct = true;
  std::size_t history_char_budget = 16000;
  int workers = 1;

  bool all_pairs = false;
  learn::TrainConfig sft = learn::sft_defaults();
  learn::TrainConfig reward = learn::reward_defaults();
  learn::RlConfig rl = learn::rl_defaults();

  std::vector<explanation::FactRange> sweep_ranges;
  int top_k = 10;

  std::string hash;  // config_hash of the key-values this was built from
};

// Validates types, ranges and path existence; the seed is mandatory.
RunConfig resolve(const KeyValues& kv);

// SHA-256 over the sorted assignments. Input paths contribute the hash of
// their content rather than their location; output_dir does not contribute.
std::string config_hash(const KeyValues& kv);

explanation::FactRange parse_fact_range(std::string_view text);

}  // namespace structex::config
