// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "structex/learn.hpp"

namespace structex::learn {
namespace {

constexpr std::array<std::string_view, kEmbeddingDim> kEmbeddingNames = {
    "favorable_1", "favorable_2", "favorable_3", "adverse_1", "adverse_2", "adverse_3",
    "total_selected", "net_strength", "decision_SB", "decision_B", "decision_H", "decision_S",
    "decision_SS", "eps_bullish", "eps_stable", "eps_bearish", "revenue_bullish", "revenue_stable",
    "revenue_bearish", "price_bullish", "price_stable", "price_bearish", "table_facts", "bias"};

constexpr std::array<std::string_view, kInputDim> kInputNames = {
    "eps_bullish", "eps_stable", "eps_bearish", "revenue_bullish", "revenue_stable", "revenue_bearish",
    "price_bullish", "price_stable", "price_bearish", "table_facts_scaled", "bias"};

template <typename Array>
void write_metric_one_hots(const facttable::FactTable& x, Array& out, std::size_t offset) {
  for (auto kind : facttable::kAllMetricKinds) {
    const auto k = static_cast<std::size_t>(kind);
    out[offset + 3 * k + static_cast<std::size_t>(x.metric(kind))] = 1.0;
  }
}

}  // namespace

std::span<const std::string_view> embedding_layout() { return kEmbeddingNames; }
std::span<const std::string_view> input_layout() { return kInputNames; }

FeatureVector embed(const facttable::FactTable& x, const explanation::StructuredExplanation& y) {
  FeatureVector f{};
  for (const auto& s : y.selected) {
    const auto base = s.strength.sign == explanation::Sign::kPositive ? layout::kFavorable : layout::kAdverse;
    f[base + static_cast<std::size_t>(s.strength.magnitude - 1)] += 1.0;
    f[layout::kNetStrength] += s.strength.signed_value();
  }
  f[layout::kTotalSelected] = static_cast<double>(y.selected.size());
  f[layout::kDecision + index_of(y.decision)] = 1.0;
  write_metric_one_hots(x, f, layout::kMetrics);
  f[layout::kTableFacts] = static_cast<double>(x.facts.size());
  f[layout::kBias] = 1.0;
  return f;
}

InputFeatures input_features(const facttable::FactTable& x) {
  InputFeatures f{};
  write_metric_one_hots(x, f, 0);
  f[9] = static_cast<double>(x.facts.size()) / kFactCountScale;
  f[10] = 1.0;
  return f;
}

double RewardModel::score(const FeatureVector& features) const {
  double s = 0.0;
  for (std::size_t k = 0; k < kEmbeddingDim; ++k) s += phi[k] * features[k];
  return s;
}

std::array<double, kNumDecisions> RewardModel::decision_rewards(const facttable::FactTable& x,
                                                                const explanation::StructuredExplanation& y) const {
  std::array<double, kNumDecisions> rewards{};
  auto variant = y;
  for (Decision d : kAllDecisions) {
    variant.decision = d;
    rewards[index_of(d)] = score(embed(x, variant));
  }
  return rewards;
}

Probabilities softmax(std::span<const double, kNumDecisions> logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  Probabilities p{};
  double norm = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) norm += (p[d] = std::exp(logits[d] - zmax));
  for (double& v : p) v /= norm;
  return p;
}

std::array<double, kNumDecisions> DecisionPolicy::logits(const InputFeatures& x) const {
  std::array<double, kNumDecisions> z{};
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    for (std::size_t j = 0; j < kInputDim; ++j) z[d] += theta[d * kInputDim + j] * x[j];
  }
  return z;
}

Probabilities DecisionPolicy::probabilities(const InputFeatures& x) const { return softmax(logits(x)); }

Decision DecisionPolicy::predict(const InputFeatures& x) const {
  const auto p = probabilities(x);
  return decision_at(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
}

PreferencePair to_preference_pair(const reflect::ComparisonPair& pair) {
  return {embed(pair.input, pair.preferred), embed(pair.input, pair.rejected)};
}

SftExample to_sft_example(const reflect::Demonstration& demo) {
  return {input_features(demo.input), index_of(demo.output.decision)};
}

PolicyContext to_policy_context(const facttable::FactTable& x, const explanation::StructuredExplanation& y,
                                const RewardModel& reward) {
  return {input_features(x), reward.decision_rewards(x, y)};
}

}  // namespace structex::learn
