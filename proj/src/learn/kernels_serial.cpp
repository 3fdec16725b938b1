// SPDX-License-Identifier: Apache-2.0
// Reference implementations: one pass, left-to-right accumulation.
#include <algorithm>
#include <cmath>
#include <numeric>

#include "structex/error.hpp"
#include "structex/kernels.hpp"

namespace structex::learn::kernels::serial {
namespace {

std::size_t pick(std::span<const std::size_t> batch, std::size_t i) { return batch.empty() ? i : batch[i]; }

}  // namespace

double reward_loss(std::span<const double> phi, std::span<const PreferencePair> pairs,
                   std::span<const std::size_t> batch, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = batch.empty() ? pairs.size() : batch.size();
  if (n == 0) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pairs[pick(batch, i)];
    double margin = 0.0;
    for (std::size_t k = 0; k < kEmbeddingDim; ++k) margin += phi[k] * (p.preferred[k] - p.rejected[k]);
    // -log sigmoid(m) and its derivative -sigmoid(-m).
    loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    const double weight = -1.0 / (1.0 + std::exp(margin));
    for (std::size_t k = 0; k < kEmbeddingDim; ++k) grad[k] += weight * (p.preferred[k] - p.rejected[k]);
  }
  for (double& g : grad) g /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

double sft_loss(std::span<const double> theta, std::span<const SftExample> examples,
                std::span<const std::size_t> batch, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = batch.empty() ? examples.size() : batch.size();
  if (n == 0) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = examples[pick(batch, i)];
    std::array<double, kNumDecisions> z{};
    for (std::size_t d = 0; d < kNumDecisions; ++d) {
      for (std::size_t j = 0; j < kInputDim; ++j) z[d] += theta[d * kInputDim + j] * ex.x[j];
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double norm = 0.0;
    for (double v : z) norm += std::exp(v - zmax);
    const double log_norm = zmax + std::log(norm);
    loss += log_norm - z[ex.gold];
    for (std::size_t d = 0; d < kNumDecisions; ++d) {
      const double dz = std::exp(z[d] - log_norm) - (d == ex.gold ? 1.0 : 0.0);
      for (std::size_t j = 0; j < kInputDim; ++j) grad[d * kInputDim + j] += dz * ex.x[j];
    }
  }
  for (double& g : grad) g /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

double rl_objective(std::span<const double> theta, std::span<const PolicyContext> contexts,
                    std::span<const Probabilities> reference, double beta, Penalty penalty,
                    std::span<const std::size_t> batch, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = batch.empty() ? contexts.size() : batch.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = pick(batch, i);
    const auto& ctx = contexts[idx];
    const auto& ref = reference[idx];
    std::array<double, kNumDecisions> z{};
    for (std::size_t d = 0; d < kNumDecisions; ++d) {
      for (std::size_t j = 0; j < kInputDim; ++j) z[d] += theta[d * kInputDim + j] * ctx.x[j];
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    std::array<double, kNumDecisions> p{};
    double norm = 0.0;
    for (std::size_t d = 0; d < kNumDecisions; ++d) norm += (p[d] = std::exp(z[d] - zmax));
    for (double& v : p) v /= norm;

    // Objective and its partials with respect to each p'(y).
    std::array<double, kNumDecisions> dp{};
    double objective = 0.0;
    for (std::size_t d = 0; d < kNumDecisions; ++d) {
      if (ref[d] == 0.0) throw Error(ErrorCode::kReferenceZero, "reference policy assigns zero probability");
      if (penalty == Penalty::kRatio) {
        objective += p[d] * ctx.rewards[d] - beta * p[d] * p[d] / ref[d];
        dp[d] = ctx.rewards[d] - 2.0 * beta * p[d] / ref[d];
      } else {
        const double log_ratio = p[d] > 0.0 ? std::log(p[d] / ref[d]) : 0.0;
        objective += p[d] * ctx.rewards[d] - beta * p[d] * log_ratio;
        dp[d] = ctx.rewards[d] - beta * (log_ratio + 1.0);
      }
    }
    total += objective;
    double mean_dp = 0.0;
    for (std::size_t d = 0; d < kNumDecisions; ++d) mean_dp += p[d] * dp[d];
    for (std::size_t d = 0; d < kNumDecisions; ++d) {
      const double dz = p[d] * (dp[d] - mean_dp);
      for (std::size_t j = 0; j < kInputDim; ++j) grad[d * kInputDim + j] += dz * ctx.x[j];
    }
  }
  for (double& g : grad) g /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

}  // namespace structex::learn::kernels::serial
