// SPDX-License-Identifier: Apache-2.0
// Serial reference against the OpenMP kernels over the full data set.

#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "structex/kernels.hpp"
#include "structex/random.hpp"

using namespace structex;
using namespace structex::learn;

namespace {

struct Data {
  std::vector<PreferencePair> pairs;
  std::vector<SftExample> demos;
  std::vector<PolicyContext> contexts;
  std::vector<Probabilities> reference;
  std::vector<double> phi = std::vector<double>(kEmbeddingDim, 0.01);
  std::vector<double> theta = std::vector<double>(kNumDecisions * kInputDim, 0.01);
};

const Data& data(std::size_t n) {
  static std::map<std::size_t, Data> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (!fresh) return it->second;
  Rng rng(n);
  auto& d = it->second;
  for (std::size_t i = 0; i < n; ++i) {
    PreferencePair p;
    for (auto& v : p.preferred) v = uniform_unit(rng);
    for (auto& v : p.rejected) v = uniform_unit(rng);
    d.pairs.push_back(p);
    InputFeatures x{};
    for (auto& v : x) v = uniform_unit(rng);
    d.demos.push_back({x, uniform_index(rng, kNumDecisions)});
    PolicyContext c{x, {}};
    for (auto& r : c.rewards) r = uniform_unit(rng);
    d.contexts.push_back(c);
    d.reference.push_back({0.2, 0.2, 0.2, 0.2, 0.2});
  }
  return d;
}

template <bool Parallel>
void BM_reward(benchmark::State& state) {
  const auto& d = data(static_cast<std::size_t>(state.range(0)));
  std::vector<double> g(kEmbeddingDim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::reward_loss(d.phi, d.pairs, {}, g)
                                      : kernels::serial::reward_loss(d.phi, d.pairs, {}, g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_sft(benchmark::State& state) {
  const auto& d = data(static_cast<std::size_t>(state.range(0)));
  std::vector<double> g(d.theta.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::sft_loss(d.theta, d.demos, {}, g)
                                      : kernels::serial::sft_loss(d.theta, d.demos, {}, g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_rl(benchmark::State& state) {
  const auto& d = data(static_cast<std::size_t>(state.range(0)));
  std::vector<double> g(d.theta.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        Parallel ? kernels::rl_objective(d.theta, d.contexts, d.reference, 0.2, Penalty::kRatio, {}, g)
                 : kernels::serial::rl_objective(d.theta, d.contexts, d.reference, 0.2, Penalty::kRatio, {}, g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_reward<false>)->Name("reward_loss/serial")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_reward<true>)->Name("reward_loss/openmp")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_sft<false>)->Name("sft_loss/serial")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_sft<true>)->Name("sft_loss/openmp")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_rl<false>)->Name("rl_objective/serial")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_rl<true>)->Name("rl_objective/openmp")->Arg(1 << 10)->Arg(1 << 16);

BENCHMARK_MAIN();
