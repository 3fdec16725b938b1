// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/jsonl.hpp"
#include "structex/learn.hpp"

namespace structex::learn {
namespace {

std::string format_model(std::string_view kind, const ModelHeader& fixed, const ModelHeader& extra,
                         std::span<const double> values) {
  std::string out = fmt::format("kind {}\n", kind);
  for (const auto& [k, v] : fixed) out += fmt::format("{} {}\n", k, v);
  for (const auto& [k, v] : extra) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("bad model header entry '{}'", k));
    }
    out += fmt::format("{} {}\n", k, v);
  }
  out += "values\n";
  for (double v : values) out += fmt::format("{:.17g}\n", v);
  return out;
}

struct ParsedModel {
  std::string kind;
  ModelHeader header;
  std::vector<double> values;
};

ParsedModel parse_model(const std::string& text, const std::filesystem::path& path) {
  ParsedModel model;
  std::istringstream in(text);
  std::string line;
  bool in_values = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (in_values) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || ptr != line.data() + line.size()) {
        throw Error(ErrorCode::kParseError, fmt::format("{}: bad value '{}'", path.string(), line));
      }
      model.values.push_back(v);
      continue;
    }
    if (line == "values") {
      in_values = true;
      continue;
    }
    const auto space = line.find(' ');
    std::string key = line.substr(0, space);
    std::string value = space == std::string::npos ? "" : line.substr(space + 1);
    if (key == "kind") {
      model.kind = value;
    } else {
      model.header.emplace_back(std::move(key), std::move(value));
    }
  }
  if (!in_values) throw Error(ErrorCode::kParseError, fmt::format("{}: missing 'values' line", path.string()));
  return model;
}

std::string header_value(const ParsedModel& m, std::string_view key) {
  for (const auto& [k, v] : m.header) {
    if (k == key) return v;
  }
  return {};
}

std::string join_layout(std::span<const std::string_view> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

}  // namespace

std::string format_reward_model(const RewardModel& model, const ModelHeader& extra) {
  const ModelHeader fixed = {{"dimension", std::to_string(kEmbeddingDim)},
                             {"layout", join_layout(embedding_layout())}};
  return format_model("reward_model", fixed, extra, model.phi);
}

std::string format_policy(const DecisionPolicy& policy, const ModelHeader& extra) {
  const ModelHeader fixed = {{"rows", std::to_string(kNumDecisions)},
                             {"cols", std::to_string(kInputDim)},
                             {"dimension", std::to_string(kNumDecisions * kInputDim)},
                             {"layout", join_layout(input_layout())}};
  return format_model("policy", fixed, extra, policy.theta);
}

void save_reward_model(const std::filesystem::path& path, const RewardModel& model, const ModelHeader& extra) {
  write_text_file(path, format_reward_model(model, extra));
}

void save_policy(const std::filesystem::path& path, const DecisionPolicy& policy, const ModelHeader& extra) {
  write_text_file(path, format_policy(policy, extra));
}

RewardModel load_reward_model(const std::filesystem::path& path) {
  const auto parsed = parse_model(read_text_file(path), path);
  if (parsed.kind != "reward_model") {
    throw Error(ErrorCode::kParseError, fmt::format("{}: not a reward model (kind '{}')", path.string(), parsed.kind));
  }
  if (parsed.values.size() != kEmbeddingDim || header_value(parsed, "dimension") != std::to_string(kEmbeddingDim)) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: expected {} weights", path.string(), kEmbeddingDim));
  }
  RewardModel model;
  std::copy(parsed.values.begin(), parsed.values.end(), model.phi.begin());
  return model;
}

DecisionPolicy load_policy(const std::filesystem::path& path) {
  const auto parsed = parse_model(read_text_file(path), path);
  if (parsed.kind != "policy") {
    throw Error(ErrorCode::kParseError, fmt::format("{}: not a policy (kind '{}')", path.string(), parsed.kind));
  }
  constexpr std::size_t n = kNumDecisions * kInputDim;
  if (parsed.values.size() != n || header_value(parsed, "rows") != std::to_string(kNumDecisions) ||
      header_value(parsed, "cols") != std::to_string(kInputDim)) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: expected a {}x{} weight matrix", path.string(),
                                                    kNumDecisions, kInputDim));
  }
  DecisionPolicy policy;
  std::copy(parsed.values.begin(), parsed.values.end(), policy.theta.begin());
  return policy;
}

}  // namespace structex::learn
