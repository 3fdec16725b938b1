// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/kernels.hpp"
#include "structex/random.hpp"

namespace structex::learn {
namespace {

enum class Direction { kDescend, kAscend };

// Mini-batch loop shared by the three trainers. `kernel(params, batch, grad)`
// returns the mean value over `batch` (all examples when empty).
template <typename Kernel>
std::vector<EpochRecord> run_optimizer(std::span<double> params, std::size_t n, const TrainConfig& config,
                                       Direction direction, Kernel&& kernel) {
  std::vector<double> grad(params.size());
  std::vector<EpochRecord> history;
  history.push_back({0, kernel(params, std::span<const std::size_t>{}, std::span<double>(grad))});
  if (n == 0 || config.epochs <= 0) return history;

  const std::size_t batch = (config.batch_size == 0 || config.batch_size >= n) ? n : config.batch_size;
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(config.epochs);
  const double sign = direction == Direction::kAscend ? 1.0 : -1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  Rng rng(config.seed);

  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < n) seeded_shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(n, begin + batch);
      std::span<const std::size_t> indices(order.data() + begin, end - begin);
      kernel(std::span<const double>(params), indices, std::span<double>(grad));
      const double lr = scheduled_lr(config, step, total_steps);
      if (config.adam) {
        const double t = static_cast<double>(step + 1);
        const double c1 = 1.0 - std::pow(config.adam_beta1, t);
        const double c2 = 1.0 - std::pow(config.adam_beta2, t);
        for (std::size_t k = 0; k < params.size(); ++k) {
          m[k] = config.adam_beta1 * m[k] + (1.0 - config.adam_beta1) * grad[k];
          v[k] = config.adam_beta2 * v[k] + (1.0 - config.adam_beta2) * grad[k] * grad[k];
          params[k] += sign * lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.adam_epsilon);
        }
      } else {
        for (std::size_t k = 0; k < params.size(); ++k) params[k] += sign * lr * grad[k];
      }
    }
    history.push_back({epoch, kernel(std::span<const double>(params), std::span<const std::size_t>{},
                                     std::span<double>(grad))});
  }
  return history;
}

std::vector<Probabilities> reference_probabilities(const DecisionPolicy& reference,
                                                   std::span<const PolicyContext> inputs) {
  std::vector<Probabilities> out;
  out.reserve(inputs.size());
  for (const auto& ctx : inputs) {
    auto p = reference.probabilities(ctx.x);
    if (std::any_of(p.begin(), p.end(), [](double v) { return v == 0.0; })) {
      throw Error(ErrorCode::kReferenceZero, "reference policy assigns zero probability to a decision");
    }
    out.push_back(p);
  }
  return out;
}

void check_reference(std::span<const double, kNumDecisions> reference) {
  for (double v : reference) {
    if (v == 0.0) throw Error(ErrorCode::kReferenceZero, "reference policy assigns zero probability to a decision");
  }
}

}  // namespace

TrainConfig sft_defaults() {
  TrainConfig c;
  c.epochs = 3;
  c.lr = 1e-5;
  return c;
}

TrainConfig reward_defaults() {
  TrainConfig c;
  c.epochs = 3;
  c.lr = 1e-4;
  return c;
}

RlConfig rl_defaults() {
  RlConfig c;
  c.epochs = 2;
  c.lr = 1e-5;
  c.beta = 0.2;
  return c;
}

double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return config.lr;
  const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) return config.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double span = static_cast<double>(std::max<std::size_t>(1, total_steps - warmup));
  const double progress = static_cast<double>(step - warmup) / span;
  return config.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

SftResult fit_sft(std::span<const SftExample> demos, const TrainConfig& config,
                  const std::optional<DecisionPolicy>& init) {
  if (demos.empty()) throw Error(ErrorCode::kInvalidInput, "fit_sft needs at least one demonstration");
  SftResult result;
  if (init) result.policy = *init;
  result.degenerate = std::all_of(demos.begin(), demos.end(),
                                  [&](const SftExample& e) { return e.gold == demos.front().gold; });
  result.history = run_optimizer(result.policy.theta, demos.size(), config, Direction::kDescend,
                                 [&](std::span<const double> p, std::span<const std::size_t> batch,
                                     std::span<double> g) { return kernels::sft_loss(p, demos, batch, g); });
  return result;
}

RewardResult fit_reward(std::span<const PreferencePair> pairs, const TrainConfig& config) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidInput, "fit_reward needs at least one comparison");
  RewardResult result;
  result.history = run_optimizer(result.model.phi, pairs.size(), config, Direction::kDescend,
                                 [&](std::span<const double> p, std::span<const std::size_t> batch,
                                     std::span<double> g) { return kernels::reward_loss(p, pairs, batch, g); });
  return result;
}

double ratio_penalty(std::span<const double, kNumDecisions> current, std::span<const double, kNumDecisions> reference) {
  check_reference(reference);
  double s = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) s += current[d] * current[d] / reference[d];
  return s;
}

double rl_objective(std::span<const double, kNumDecisions> current, std::span<const double, kNumDecisions> reference,
                    std::span<const double, kNumDecisions> rewards, double beta, Penalty penalty) {
  check_reference(reference);
  double expected = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) expected += current[d] * rewards[d];
  if (penalty == Penalty::kRatio) return expected - beta * ratio_penalty(current, reference);
  double kl = 0.0;
  for (std::size_t d = 0; d < kNumDecisions; ++d) {
    if (current[d] > 0.0) kl += current[d] * std::log(current[d] / reference[d]);
  }
  return expected - beta * kl;
}

double rl_objective(const DecisionPolicy& current, const DecisionPolicy& reference, const PolicyContext& context,
                    double beta, Penalty penalty) {
  const auto p_cur = current.probabilities(context.x);
  const auto p_ref = reference.probabilities(context.x);
  return rl_objective(p_cur, p_ref, context.rewards, beta, penalty);
}

PolicyResult optimize_policy(const DecisionPolicy& reference, std::span<const PolicyContext> inputs,
                             const RlConfig& config, const std::optional<DecisionPolicy>& start) {
  const auto ref_probs = reference_probabilities(reference, inputs);
  PolicyResult result;
  result.policy = start.value_or(reference);
  result.history = run_optimizer(
      result.policy.theta, inputs.size(), config, Direction::kAscend,
      [&](std::span<const double> p, std::span<const std::size_t> batch, std::span<double> g) {
        return kernels::rl_objective(p, inputs, ref_probs, config.beta, config.penalty, batch, g);
      });
  return result;
}

double mean_total_variation(const DecisionPolicy& a, const DecisionPolicy& b, std::span<const PolicyContext> inputs) {
  if (inputs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ctx : inputs) {
    const auto pa = a.probabilities(ctx.x);
    const auto pb = b.probabilities(ctx.x);
    double tv = 0.0;
    for (std::size_t d = 0; d < kNumDecisions; ++d) tv += std::abs(pa[d] - pb[d]);
    total += 0.5 * tv;
  }
  return total / static_cast<double>(inputs.size());
}

std::string format_history(std::span<const EpochRecord> history, std::string_view column) {
  std::string out = fmt::format("epoch\t{}\n", column);
  for (const auto& r : history) out += fmt::format("{}\t{:.12g}\n", r.epoch, r.value);
  return out;
}

}  // namespace structex::learn
