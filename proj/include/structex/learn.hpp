// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "structex/explanation.hpp"
#include "structex/facttable.hpp"
#include "structex/reflect.hpp"

namespace structex::learn {

// Joint (input, explanation) embedding consumed by the reward model:
//   [0..2]   favorable counts by magnitude 1..3
//   [3..5]   adverse counts by magnitude 1..3
//   [6]      total selected facts
//   [7]      net signed strength
//   [8..12]  decision one-hot (SB, B, H, S, SS)
//   [13..21] metric one-hots: EPS, revenue, price x (Bullish, Stable, Bearish)
//   [22]     facts in the table
//   [23]     bias
inline constexpr std::size_t kEmbeddingDim = 24;

namespace layout {
inline constexpr std::size_t kFavorable = 0;
inline constexpr std::size_t kAdverse = 3;
inline constexpr std::size_t kTotalSelected = 6;
inline constexpr std::size_t kNetStrength = 7;
inline constexpr std::size_t kDecision = 8;
inline constexpr std::size_t kMetrics = 13;
inline constexpr std::size_t kTableFacts = 22;
inline constexpr std::size_t kBias = 23;
}  // namespace layout

// Input-only features for the policy: the nine metric one-hots, the table
// size divided by kFactCountScale, and a bias.
inline constexpr std::size_t kInputDim = 11;
inline constexpr double kFactCountScale = 50.0;

using FeatureVector = std::array<double, kEmbeddingDim>;
using InputFeatures = std::array<double, kInputDim>;
using Probabilities = std::array<double, kNumDecisions>;

std::span<const std::string_view> embedding_layout();
std::span<const std::string_view> input_layout();

FeatureVector embed(const facttable::FactTable& x, const explanation::StructuredExplanation& y);
InputFeatures input_features(const facttable::FactTable& x);

struct RewardModel {
  FeatureVector phi{};

  [[nodiscard]] double score(const FeatureVector& features) const;
  // Reward of each decision when the explanation's facts are held fixed.
  [[nodiscard]] std::array<double, kNumDecisions> decision_rewards(
      const facttable::FactTable& x, const explanation::StructuredExplanation& y) const;
};

// Linear softmax policy over the five decisions; theta is row-major
// (decision x input feature).
struct DecisionPolicy {
  std::array<double, kNumDecisions * kInputDim> theta{};

  [[nodiscard]] std::array<double, kNumDecisions> logits(const InputFeatures& x) const;
  [[nodiscard]] Probabilities probabilities(const InputFeatures& x) const;
  [[nodiscard]] Decision predict(const InputFeatures& x) const;
};

Probabilities softmax(std::span<const double, kNumDecisions> logits);

struct PreferencePair {
  FeatureVector preferred{};
  FeatureVector rejected{};
};

struct SftExample {
  InputFeatures x{};
  std::size_t gold = 0;  // decision index
};

struct PolicyContext {
  InputFeatures x{};
  std::array<double, kNumDecisions> rewards{};
};

PreferencePair to_preference_pair(const reflect::ComparisonPair& pair);
SftExample to_sft_example(const reflect::Demonstration& demo);
PolicyContext to_policy_context(const facttable::FactTable& x, const explanation::StructuredExplanation& y,
                                const RewardModel& reward);

enum class Penalty { kRatio, kLogRatio };

struct TrainConfig {
  int epochs = 3;
  double lr = 1e-5;
  std::size_t batch_size = 1;  // 0 means full batch
  double warmup_ratio = 0.1;
  std::uint64_t seed = 0;
  bool adam = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct RlConfig : TrainConfig {
  double beta = 0.2;
  Penalty penalty = Penalty::kRatio;
};

TrainConfig sft_defaults();     // 3 epochs, lr 1e-5
TrainConfig reward_defaults();  // 3 epochs, lr 1e-4
RlConfig rl_defaults();         // 2 epochs, lr 1e-5, beta 0.2

// Linear warm-up over the first ceil(warmup_ratio * total) steps, cosine decay after.
double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps);

// Loss (or objective) over the full data set, epoch 0 being the start.
struct EpochRecord {
  int epoch = 0;
  double value = 0.0;
};

struct SftResult {
  DecisionPolicy policy;
  std::vector<EpochRecord> history;
  bool degenerate = false;  // every demonstration had the same decision
};

struct RewardResult {
  RewardModel model;
  std::vector<EpochRecord> history;
};

struct PolicyResult {
  DecisionPolicy policy;
  std::vector<EpochRecord> history;
};

// Mean negative log-likelihood of the gold decisions. Starts from `init`
// (zero weights, i.e. uniform, when absent).
SftResult fit_sft(std::span<const SftExample> demos, const TrainConfig& config = sft_defaults(),
                  const std::optional<DecisionPolicy>& init = std::nullopt);

// Mean -log sigmoid(r(preferred) - r(rejected)) from phi = 0.
RewardResult fit_reward(std::span<const PreferencePair> pairs, const TrainConfig& config = reward_defaults());

// sum_y p'(y) r(y) - beta * sum_y p'(y)^2 / p(y)  (ratio penalty), or the KL
// form sum_y p'(y) log(p'(y)/p(y)) for Penalty::kLogRatio. Throws
// ReferenceZero if p has a zero entry.
double rl_objective(std::span<const double, kNumDecisions> current, std::span<const double, kNumDecisions> reference,
                    std::span<const double, kNumDecisions> rewards, double beta, Penalty penalty = Penalty::kRatio);

double rl_objective(const DecisionPolicy& current, const DecisionPolicy& reference, const PolicyContext& context,
                    double beta, Penalty penalty = Penalty::kRatio);

// sum_y p'(y)^2 / p(y); at least 1, equal to 1 iff p' == p.
double ratio_penalty(std::span<const double, kNumDecisions> current, std::span<const double, kNumDecisions> reference);

// Gradient ascent on the mean objective. The reference policy stays frozen.
// Optimization starts from `start` when given, otherwise from the reference.
PolicyResult optimize_policy(const DecisionPolicy& reference, std::span<const PolicyContext> inputs,
                             const RlConfig& config = rl_defaults(),
                             const std::optional<DecisionPolicy>& start = std::nullopt);

double mean_total_variation(const DecisionPolicy& a, const DecisionPolicy& b, std::span<const PolicyContext> inputs);

// A differentiable scalar of a flat parameter vector. `evaluate` writes the
// analytic gradient into `grad` (same size as params) and returns the value.
struct Objective {
  std::size_t dimension = 0;
  std::function<double(std::span<const double> params, std::span<double> grad)> evaluate;
};

Objective reward_objective(std::span<const PreferencePair> pairs);
Objective sft_objective(std::span<const SftExample> examples);
Objective rl_objective_function(const DecisionPolicy& reference, std::span<const PolicyContext> inputs,
                                double beta, Penalty penalty = Penalty::kRatio);

// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// numeric being the central difference with step epsilon.
double grad_check(const Objective& objective, std::span<const double> params, double epsilon = 1e-5);

// --- model files ---

using ModelHeader = std::vector<std::pair<std::string, std::string>>;

void save_reward_model(const std::filesystem::path& path, const RewardModel& model, const ModelHeader& extra = {});
RewardModel load_reward_model(const std::filesystem::path& path);
void save_policy(const std::filesystem::path& path, const DecisionPolicy& policy, const ModelHeader& extra = {});
DecisionPolicy load_policy(const std::filesystem::path& path);

std::string format_reward_model(const RewardModel& model, const ModelHeader& extra = {});
std::string format_policy(const DecisionPolicy& policy, const ModelHeader& extra = {});

// Tab-separated "epoch<TAB><column>" table.
std::string format_history(std::span<const EpochRecord> history, std::string_view column);

}  // namespace structex::learn
