// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/eval.hpp"

namespace structex::eval {

std::vector<explanation::FactRange> default_sweep_ranges() { return {{3, 6}, {6, 10}, {10, 15}}; }

std::vector<double> cumulative_solve_rate(std::span<const reflect::ReflectionTrace> traces, int max_reflections) {
  if (max_reflections < 0) throw Error(ErrorCode::kInvalidInput, "max_reflections must be nonnegative");
  std::vector<long> solved_at(static_cast<std::size_t>(max_reflections) + 1, 0);
  for (const auto& t : traces) {
    if (!t.solved()) continue;
    const auto round = t.attempts.size() - 1;
    if (round < solved_at.size()) ++solved_at[round];
  }
  std::vector<double> rate(solved_at.size(), 0.0);
  if (traces.empty()) return rate;
  long running = 0;
  for (std::size_t r = 0; r < solved_at.size(); ++r) {
    running += solved_at[r];
    rate[r] = static_cast<double>(running) / static_cast<double>(traces.size());
  }
  return rate;
}

std::vector<RangeCurve> sweep_fact_ranges(std::span<const facttable::TableRecord> corpus, backend::LlmBackend& llm,
                                          const backend::TemplateSet& templates,
                                          std::span<const explanation::FactRange> ranges,
                                          const reflect::ReflectOptions& base, int workers) {
  if (ranges.empty()) throw Error(ErrorCode::kInvalidInput, "no fact ranges to sweep");
  std::vector<RangeCurve> curves;
  for (const auto& range : ranges) {
    auto options = base;
    options.range = range;
    RangeCurve curve;
    curve.range = range;
    curve.traces = reflect::run_traces(corpus, llm, templates, options, workers);
    curve.solve_rate = cumulative_solve_rate(curve.traces, options.max_reflections);
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::string format_sweep(std::span<const RangeCurve> curves) {
  std::size_t rounds = 0;
  for (const auto& c : curves) rounds = std::max(rounds, c.solve_rate.size());
  std::string out = fmt::format("{:<8}", "range");
  for (std::size_t r = 0; r < rounds; ++r) out += fmt::format("{:>10}", fmt::format("round {}", r));
  out += '\n';
  for (const auto& c : curves) {
    out += fmt::format("{:<8}", explanation::format_range(c.range));
    for (double v : c.solve_rate) out += fmt::format("{:>9.2f}%", 100.0 * v);
    out += '\n';
  }
  return out;
}

std::vector<Json> sweep_to_jsonl(std::span<const RangeCurve> curves) {
  std::vector<Json> out;
  for (const auto& c : curves) {
    out.push_back({{"range", explanation::format_range(c.range)},
                   {"lo", c.range.lo},
                   {"hi", c.range.hi},
                   {"instances", c.traces.size()},
                   {"solve_rate", c.solve_rate}});
  }
  return out;
}

}  // namespace structex::eval
