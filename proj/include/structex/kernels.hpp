// SPDX-License-Identifier: Apache-2.0
#pragma once

// Loss/gradient kernels behind the trainers. Each kernel averages over the
// examples named by `batch` (every example when `batch` is empty), writes the
// gradient of that mean into `grad` and returns the mean.
//
// The OpenMP versions reduce fixed-size chunks in chunk order, so results do
// not depend on the thread count. The serial namespace holds the plain
// reference loops the parallel versions are tested against.

#include <array>
#include <span>

#include "structex/learn.hpp"

namespace structex::learn::kernels {

inline constexpr std::size_t kChunk = 64;

// Mean -log sigmoid(phi . (preferred - rejected)); grad over phi (24).
double reward_loss(std::span<const double> phi, std::span<const PreferencePair> pairs,
                   std::span<const std::size_t> batch, std::span<double> grad);

// Mean -log softmax(theta x)[gold]; grad over theta (5 x 11).
double sft_loss(std::span<const double> theta, std::span<const SftExample> examples,
                std::span<const std::size_t> batch, std::span<double> grad);

// Mean rl objective (to be maximized); grad over theta. `reference` holds the
// frozen reference probabilities per context.
double rl_objective(std::span<const double> theta, std::span<const PolicyContext> contexts,
                    std::span<const Probabilities> reference, double beta, Penalty penalty,
                    std::span<const std::size_t> batch, std::span<double> grad);

namespace serial {

double reward_loss(std::span<const double> phi, std::span<const PreferencePair> pairs,
                   std::span<const std::size_t> batch, std::span<double> grad);
double sft_loss(std::span<const double> theta, std::span<const SftExample> examples,
                std::span<const std::size_t> batch, std::span<double> grad);
double rl_objective(std::span<const double> theta, std::span<const PolicyContext> contexts,
                    std::span<const Probabilities> reference, double beta, Penalty penalty,
                    std::span<const std::size_t> batch, std::span<double> grad);

}  // namespace serial

// Per-example pieces shared by both versions. Each adds the example's
// gradient into `grad` and returns its loss/objective.
namespace detail {

double reward_term(std::span<const double> phi, const PreferencePair& pair, std::span<double> grad);
double sft_term(std::span<const double> theta, const SftExample& example, std::span<double> grad);
double rl_term(std::span<const double> theta, const PolicyContext& context, const Probabilities& reference,
               double beta, Penalty penalty, std::span<double> grad);

}  // namespace detail

}  // namespace structex::learn::kernels
