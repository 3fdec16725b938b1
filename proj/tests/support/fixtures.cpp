// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace structex::testing {
namespace {

const std::vector<std::string>& words() {
  static const std::vector<std::string> w = {"Revenue", "grew", "15%", "margin", "fell", "to", "$3.2B,", "guidance",
                                             "raised", "ratio:", "debt", "EPS", "(adjusted)", "flat", "Q3", "-",
                                             "backlog", "record", "churn", "up"};
  return w;
}

std::string random_text(Rng& rng, int min_words, int max_words) {
  const int n = min_words + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_words - min_words + 1)));
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words()[uniform_index(rng, words().size())];
  }
  // keep content clear of characters the format treats as structure at the ends
  if (out.front() == '-' || out.front() == '[') out.insert(0, "Note");
  return out;
}

}  // namespace

facttable::FactTable table_with_facts(int n, const std::string& ticker) {
  facttable::FactTable t;
  t.ticker = ticker;
  for (int i = 1; i <= n; ++i) {
    t.facts.push_back({i, fmt::format("Fact number {} about {}.", i, ticker),
                       i % 3 == 0 ? facttable::Segment::kQA : facttable::Segment::kPreparedRemarks, "CEO"});
  }
  return t;
}

explanation::StructuredExplanation random_explanation(Rng& rng, explanation::FactRange range, int table_size) {
  using namespace explanation;
  const int hi = std::min(range.hi, table_size);
  const int count = range.lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - range.lo + 1)));
  std::vector<int> idx(static_cast<std::size_t>(table_size));
  std::iota(idx.begin(), idx.end(), 1);
  seeded_shuffle(std::span<int>(idx), rng);
  StructuredExplanation e;
  e.decision = decision_at(uniform_index(rng, kNumDecisions));
  for (int i = 0; i < count; ++i) {
    Strength s{uniform_index(rng, 2) ? Sign::kPositive : Sign::kNegative, 1 + static_cast<int>(uniform_index(rng, 3))};
    e.selected.push_back({idx[static_cast<std::size_t>(i)], random_text(rng, 1, 8), s});
  }
  if (range.lo >= 2 && count >= 2) {
    e.selected[0].strength.sign = Sign::kPositive;
    e.selected[1].strength.sign = Sign::kNegative;
  }
  e.justification = random_text(rng, 3, 20) + ".";
  return e;
}

StatsCorpus planted_stats_corpus() {
  using namespace explanation;
  // Totals over 100 instances: 3992 facts, 801 favorable (100/453/248 by
  // magnitude), 110 adverse (58/29/23).
  std::vector<int> fav_mags;
  fav_mags.insert(fav_mags.end(), 100, 1);
  fav_mags.insert(fav_mags.end(), 453, 2);
  fav_mags.insert(fav_mags.end(), 248, 3);
  std::vector<int> adv_mags;
  adv_mags.insert(adv_mags.end(), 58, 1);
  adv_mags.insert(adv_mags.end(), 29, 2);
  adv_mags.insert(adv_mags.end(), 23, 3);

  StatsCorpus c;
  std::size_t fav_at = 0, adv_at = 0;
  for (int i = 0; i < 100; ++i) {
    // 92 tables of 40 facts and 8 of 39: 3680 + 312 = 3992
    const int n_facts = i < 92 ? 40 : 39;
    // instance 10 carries the extra favorable fact; 0..9 carry a second adverse one
    const int favorable = i == 10 ? 9 : 8;
    const int adverse = i < 10 ? 2 : 1;
    auto table = table_with_facts(n_facts, fmt::format("P{:03}", i));
    StructuredExplanation e;
    e.decision = Decision::kBuy;
    e.justification = "Planted.";
    int index = 1;
    for (int k = 0; k < favorable; ++k, ++index) {
      e.selected.push_back({index, "fav", {Sign::kPositive, fav_mags[fav_at++]}});
    }
    for (int k = 0; k < adverse; ++k, ++index) {
      e.selected.push_back({index, "adv", {Sign::kNegative, adv_mags[adv_at++]}});
    }
    c.explanations.push_back(std::move(e));
    c.tables.push_back(std::move(table));
  }
  return c;
}

reflect::ReflectionTrace trace_from_path(const std::string& id, const std::vector<Decision>& path, Decision gold) {
  reflect::ReflectionTrace t;
  t.instance_id = id;
  t.table = table_with_facts(12, id);
  t.gold = gold;
  for (auto d : path) {
    reflect::Attempt a;
    a.explanation.decision = d;
    a.explanation.justification = "x";
    a.correct = d == gold;
    t.attempts.push_back(std::move(a));
  }
  t.terminated = t.attempts.back().correct ? reflect::Termination::kSolved : reflect::Termination::kExhausted;
  return t;
}

std::vector<reflect::ReflectionTrace> planted_path_traces() {
  using D = Decision;
  std::vector<PlantedPath> plan = {
      {{D::kBuy, D::kHold}, 101},
      {{D::kBuy, D::kHold, D::kStronglyBuy}, 90},
      {{D::kBuy, D::kHold, D::kStronglyBuy, D::kSell}, 47},
  };
  // Filler: every other solved path of length 1..3 over distinct decisions,
  // at most 40 traces each, until 950 solved traces exist.
  int solved = 101 + 90 + 47;
  std::vector<std::vector<D>> filler;
  for (auto a : kAllDecisions) {
    filler.push_back({a});
    for (auto b : kAllDecisions) {
      if (b == a) continue;
      filler.push_back({a, b});
      for (auto c : kAllDecisions) {
        if (c != a && c != b) filler.push_back({a, b, c});
      }
    }
  }
  for (std::size_t i = 0; i < filler.size() && solved < 950; ++i) {
    const auto& p = filler[i];
    if (std::any_of(plan.begin(), plan.end(), [&](const PlantedPath& q) { return q.path == p; })) continue;
    const int n = std::min(950 - solved, 10 + static_cast<int>(i % 30));
    plan.push_back({p, n});
    solved += n;
  }
  std::vector<reflect::ReflectionTrace> traces;
  int id = 0;
  for (const auto& p : plan) {
    for (int k = 0; k < p.count; ++k) traces.push_back(trace_from_path(fmt::format("T{:04}", id++), p.path, p.path.back()));
  }
  // 50 exhausted traces that repeated a decision after running out of retries
  for (int k = 0; k < 50; ++k) {
    traces.push_back(trace_from_path(fmt::format("T{:04}", id++), {D::kHold, D::kBuy, D::kHold, D::kBuy, D::kHold},
                                     D::kStronglySell));
  }
  return traces;
}

learn::FeatureVector random_embedding(Rng& rng) {
  learn::FeatureVector f{};
  for (std::size_t k = 0; k < 3; ++k) f[learn::layout::kFavorable + k] = static_cast<double>(uniform_index(rng, 5));
  for (std::size_t k = 0; k < 3; ++k) f[learn::layout::kAdverse + k] = static_cast<double>(uniform_index(rng, 3));
  double total = 0, net = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    total += f[learn::layout::kFavorable + k] + f[learn::layout::kAdverse + k];
    net += static_cast<double>(k + 1) * (f[learn::layout::kFavorable + k] - f[learn::layout::kAdverse + k]);
  }
  f[learn::layout::kTotalSelected] = total;
  f[learn::layout::kNetStrength] = net;
  f[learn::layout::kDecision + uniform_index(rng, kNumDecisions)] = 1.0;
  for (std::size_t m = 0; m < 3; ++m) f[learn::layout::kMetrics + 3 * m + uniform_index(rng, 3)] = 1.0;
  f[learn::layout::kTableFacts] = 30.0 + static_cast<double>(uniform_index(rng, 20));
  f[learn::layout::kBias] = 1.0;
  return f;
}

std::vector<learn::PreferencePair> planted_pairs(Rng& rng, const learn::FeatureVector& w, std::size_t n) {
  std::vector<learn::PreferencePair> out;
  while (out.size() < n) {
    auto a = random_embedding(rng);
    auto b = random_embedding(rng);
    double ua = 0, ub = 0;
    for (std::size_t k = 0; k < learn::kEmbeddingDim; ++k) {
      ua += w[k] * a[k];
      ub += w[k] * b[k];
    }
    if (ua == ub) continue;
    out.push_back(ua > ub ? learn::PreferencePair{a, b} : learn::PreferencePair{b, a});
  }
  return out;
}

}  // namespace structex::testing
