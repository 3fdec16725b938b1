// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "structex/error.hpp"
#include "structex/kernels.hpp"

namespace structex::learn {

Objective reward_objective(std::span<const PreferencePair> pairs) {
  return {kEmbeddingDim, [pairs](std::span<const double> params, std::span<double> grad) {
            return kernels::reward_loss(params, pairs, {}, grad);
          }};
}

Objective sft_objective(std::span<const SftExample> examples) {
  return {kNumDecisions * kInputDim, [examples](std::span<const double> params, std::span<double> grad) {
            return kernels::sft_loss(params, examples, {}, grad);
          }};
}

Objective rl_objective_function(const DecisionPolicy& reference, std::span<const PolicyContext> inputs, double beta,
                                Penalty penalty) {
  auto ref = std::make_shared<std::vector<Probabilities>>();
  for (const auto& ctx : inputs) ref->push_back(reference.probabilities(ctx.x));
  return {kNumDecisions * kInputDim, [ref, inputs, beta, penalty](std::span<const double> params, std::span<double> grad) {
            return kernels::rl_objective(params, inputs, *ref, beta, penalty, {}, grad);
          }};
}

double grad_check(const Objective& objective, std::span<const double> params, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidInput, "grad_check epsilon must be positive");
  if (params.size() != objective.dimension) {
    throw Error(ErrorCode::kLengthMismatch, "parameter vector does not match the objective dimension");
  }
  std::vector<double> analytic(params.size());
  objective.evaluate(params, analytic);

  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> scratch(params.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    probe[k] = params[k] + epsilon;
    const double up = objective.evaluate(probe, scratch);
    probe[k] = params[k] - epsilon;
    const double down = objective.evaluate(probe, scratch);
    probe[k] = params[k];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
  }
  return worst;
}

}  // namespace structex::learn
