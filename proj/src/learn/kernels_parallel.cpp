// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <exception>
#include <cmath>
#include <vector>

#include "structex/error.hpp"
#include "structex/kernels.hpp"

namespace structex::learn::kernels {
namespace detail {
namespace {

// logits for one input, then normalized in place.
Probabilities policy_probabilities(std::span<const double> theta, const InputFeatures& x) {
  std::array<double, kNumDecisions> z{};
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    const double* row = theta.data() + d * kInputDim;
    double acc = 0.0;
    for (std::size_t j = 0; j < kInputDim; ++j) acc += row[j] * x[j];
    z[d] = acc;
  }
  return softmax(z);
}

void accumulate_outer(std::span<double> grad, const std::array<double, kNumDecisions>& dz, const InputFeatures& x) {
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    double* row = grad.data() + d * kInputDim;
    for (std::size_t j = 0; j < kInputDim; ++j) row[j] += dz[d] * x[j];
  }
}

}  // namespace

double reward_term(std::span<const double> phi, const PreferencePair& pair, std::span<double> grad) {
  std::array<double, kEmbeddingDim> diff{};
  double margin = 0.0;
  for (std::size_t k = 0; k < kEmbeddingDim; ++k) {
    diff[k] = pair.preferred[k] - pair.rejected[k];
    margin += phi[k] * diff[k];
  }
  const double sig_neg = 1.0 / (1.0 + std::exp(margin));  // sigmoid(-m)
  for (std::size_t k = 0; k < kEmbeddingDim; ++k) grad[k] -= sig_neg * diff[k];
  return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double sft_term(std::span<const double> theta, const SftExample& example, std::span<double> grad) {
  Probabilities p = policy_probabilities(theta, example.x);
  std::array<double, kNumDecisions> dz{};
  for (std::size_t d = 0; d < kNumDecisions; ++d) dz[d] = p[d] - (d == example.gold ? 1.0 : 0.0);
  accumulate_outer(grad, dz, example.x);
  // -log p[gold] recomputed from logits for accuracy when p[gold] underflows.
  std::array<double, kNumDecisions> z{};
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    for (std::size_t j = 0; j < kInputDim; ++j) z[d] += theta[d * kInputDim + j] * example.x[j];
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double norm = 0.0;
  for (double v : z) norm += std::exp(v - zmax);
  return zmax + std::log(norm) - z[example.gold];
}

double rl_term(std::span<const double> theta, const PolicyContext& context, const Probabilities& reference,
               double beta, Penalty penalty, std::span<double> grad) {
  const Probabilities p = policy_probabilities(theta, context.x);
  std::array<double, kNumDecisions> dp{};
  double objective = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    if (reference[d] == 0.0) throw Error(ErrorCode::kReferenceZero, "reference policy assigns zero probability");
    const double ratio = p[d] / reference[d];
    if (penalty == Penalty::kRatio) {
      objective += p[d] * context.rewards[d] - beta * p[d] * ratio;
      dp[d] = context.rewards[d] - 2.0 * beta * ratio;
    } else {
      const double log_ratio = p[d] > 0.0 ? std::log(ratio) : 0.0;
      objective += p[d] * (context.rewards[d] - beta * log_ratio);
      dp[d] = context.rewards[d] - beta * (log_ratio + 1.0);
    }
  }
  double baseline = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) baseline += p[d] * dp[d];
  std::array<double, kNumDecisions> dz{};
  for (std::size_t d = 0; d < kNumDecisions; ++d) dz[d] = p[d] * (dp[d] - baseline);
  accumulate_outer(grad, dz, context.x);
  return objective;
}

}  // namespace detail

namespace {

// Chunked reduction: chunk c covers items [c*kChunk, (c+1)*kChunk). Each
// chunk's partial sums are formed serially, then chunks are summed in order.
template <typename Term>
double chunked_mean(std::size_t n, std::size_t dim, std::span<double> grad, Term&& term) {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0) return 0.0;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks * (dim + 1), 0.0);
  std::vector<std::exception_ptr> failures(chunks);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::span<double> slot(partial.data() + cu * (dim + 1), dim + 1);
    const std::size_t end = std::min(n, (cu + 1) * kChunk);
    try {
      for (std::size_t i = cu * kChunk; i < end; ++i) slot[dim] += term(i, slot.first(dim));
    } catch (...) {
      failures[cu] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* slot = partial.data() + c * (dim + 1);
    for (std::size_t k = 0; k < dim; ++k) grad[k] += slot[k];
    total += slot[dim];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : grad) g *= inv;
  return total * inv;
}

std::size_t pick(std::span<const std::size_t> batch, std::size_t i) { return batch.empty() ? i : batch[i]; }

}  // namespace

double reward_loss(std::span<const double> phi, std::span<const PreferencePair> pairs,
                   std::span<const std::size_t> batch, std::span<double> grad) {
  const std::size_t n = batch.empty() ? pairs.size() : batch.size();
  return chunked_mean(n, kEmbeddingDim, grad, [&](std::size_t i, std::span<double> g) {
    return detail::reward_term(phi, pairs[pick(batch, i)], g);
  });
}

double sft_loss(std::span<const double> theta, std::span<const SftExample> examples,
                std::span<const std::size_t> batch, std::span<double> grad) {
  const std::size_t n = batch.empty() ? examples.size() : batch.size();
  return chunked_mean(n, kNumDecisions * kInputDim, grad, [&](std::size_t i, std::span<double> g) {
    return detail::sft_term(theta, examples[pick(batch, i)], g);
  });
}

double rl_objective(std::span<const double> theta, std::span<const PolicyContext> contexts,
                    std::span<const Probabilities> reference, double beta, Penalty penalty,
                    std::span<const std::size_t> batch, std::span<double> grad) {
  const std::size_t n = batch.empty() ? contexts.size() : batch.size();
  return chunked_mean(n, kNumDecisions * kInputDim, grad, [&](std::size_t i, std::span<double> g) {
    const std::size_t idx = pick(batch, i);
    return detail::rl_term(theta, contexts[idx], reference[idx], beta, penalty, g);
  });
}

}  // namespace structex::learn::kernels
