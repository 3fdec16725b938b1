// SPDX-License-Identifier: Apache-2.0
#include "structex/reflect.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace structex::reflect {
namespace {

bool repeats(std::span<const StructuredExplanation> history, Decision d) {
  return std::any_of(history.begin(), history.end(),
                     [&](const StructuredExplanation& e) { return e.decision == d; });
}

}  // namespace

std::vector<Decision> ReflectionTrace::path() const {
  std::vector<Decision> out;
  out.reserve(attempts.size());
  for (const auto& a : attempts) out.push_back(a.explanation.decision);
  return out;
}

backend::Slots decision_slots(const facttable::FactTable& table, FactRange range) {
  return {{"company-ticker", table.ticker},
          {"fact-range", explanation::format_range(range)},
          {"fact-table", facttable::render_fact_table(table)}};
}

std::string render_history(std::span<const StructuredExplanation> history, std::size_t char_budget) {
  std::vector<std::string> blocks;
  blocks.reserve(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    blocks.push_back(fmt::format("Output {}:\n{}", i + 1, explanation::render_explanation(history[i])));
  }
  std::size_t first = 0;
  auto total = [&] {
    std::size_t n = 0;
    for (std::size_t i = first; i < blocks.size(); ++i) n += blocks[i].size() + 1;
    return n;
  };
  while (first + 1 < blocks.size() && total() > char_budget) ++first;
  std::string out;
  for (std::size_t i = first; i < blocks.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += blocks[i];
  }
  return out;
}

std::string retry_note(std::span<const StructuredExplanation> history, Decision repeated, int retry,
                       int max_retries) {
  std::vector<std::string_view> used;
  for (const auto& e : history) {
    if (std::find(used.begin(), used.end(), long_name(e.decision)) == used.end()) {
      used.push_back(long_name(e.decision));
    }
  }
  return fmt::format(
      "\nNote (retry {} of {}): your last answer repeated the decision \"{}\", which was already "
      "judged incorrect. Your decision must differ from: {}.\n",
      retry, max_retries, long_name(repeated), fmt::join(used, ", "));
}

backend::Slots reflection_slots(const facttable::FactTable& table,
                                std::span<const StructuredExplanation> history,
                                const ReflectOptions& options, const std::string& note) {
  return {{"fact-range", explanation::format_range(options.range)},
          {"fact-table", facttable::render_fact_table(table)},
          {"previous-incorrect-outputs", render_history(history, options.history_char_budget) + note}};
}

Response decide_once(const facttable::FactTable& table, backend::LlmBackend& llm,
                     const backend::PromptTemplate& tpl, FactRange range) {
  std::string raw = llm.complete(tpl, decision_slots(table, range));
  auto parsed = explanation::parse_explanation(raw, table, range);
  return Response{std::move(parsed), std::move(raw)};
}

Attempt reflect_once(const facttable::FactTable& table, std::span<const StructuredExplanation> history,
                     backend::LlmBackend& llm, const backend::PromptTemplate& tpl,
                     const ReflectOptions& options) {
  if (history.empty()) {
    throw Error(ErrorCode::kInvalidInput, "reflection needs at least one prior output");
  }
  Attempt attempt;
  std::string note;
  for (int retry = 0;; ++retry) {
    std::string raw = llm.complete(tpl, reflection_slots(table, history, options, note));
    auto parsed = explanation::parse_explanation(raw, table, options.range);
    const bool repeated = repeats(history, parsed.decision);
    if (!repeated || !options.enforce_distinct || retry >= options.max_retries) {
      attempt.constraint_violation = repeated && options.enforce_distinct;
      attempt.explanation = std::move(parsed);
      attempt.raw_response = std::move(raw);
      return attempt;
    }
    attempt.rejected_responses.push_back(std::move(raw));
    note = retry_note(history, parsed.decision, retry + 1, options.max_retries);
  }
}

ReflectionTrace run_trace(const std::string& instance_id, const facttable::FactTable& table, Decision gold,
                          backend::LlmBackend& llm, const backend::TemplateSet& templates,
                          const ReflectOptions& options) {
  if (options.max_reflections < 0) throw Error(ErrorCode::kInvalidInput, "max_reflections must be >= 0");
  ReflectionTrace trace;
  trace.instance_id = instance_id;
  trace.table = table;
  trace.gold = gold;
  trace.range = options.range;

  std::vector<StructuredExplanation> history;
  try {
    Response first = decide_once(table, llm, templates.decision, options.range);
    Attempt a;
    a.correct = first.explanation.decision == gold;
    a.explanation = std::move(first.explanation);
    a.raw_response = std::move(first.raw);
    history.push_back(a.explanation);
    trace.attempts.push_back(std::move(a));

    for (int r = 0; r < options.max_reflections && !trace.attempts.back().correct; ++r) {
      Attempt next = reflect_once(table, history, llm, templates.reflection, options);
      next.correct = next.explanation.decision == gold;
      history.push_back(next.explanation);
      trace.attempts.push_back(std::move(next));
    }
  } catch (const std::exception& e) {
    trace.terminated = Termination::kExhausted;
    throw TraceError(std::move(trace),
                     fmt::format("{} attempt {}: {}", instance_id, history.size() + 1, e.what()));
  }
  trace.terminated = trace.attempts.back().correct ? Termination::kSolved : Termination::kExhausted;
  return trace;
}

std::vector<ReflectionTrace> run_traces(std::span<const facttable::TableRecord> records,
                                        backend::LlmBackend& llm, const backend::TemplateSet& templates,
                                        const ReflectOptions& options, int workers) {
  for (const auto& r : records) {
    if (!r.gold) throw Error(ErrorCode::kInvalidInput, fmt::format("{} has no gold label", r.instance_id));
  }
  std::vector<std::optional<ReflectionTrace>> out(records.size());
  std::vector<std::exception_ptr> failures(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        out[i] = run_trace(records[i].instance_id, records[i].table, *records[i].gold, llm, templates, options);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(records.size(), static_cast<std::size_t>(std::max(1, workers)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::vector<ReflectionTrace> traces;
  traces.reserve(out.size());
  for (auto& t : out) traces.push_back(std::move(*t));
  return traces;
}

Datasets build_datasets(std::span<const ReflectionTrace> traces, const DatasetOptions& options) {
  Datasets data;
  for (const auto& trace : traces) {
    if (!trace.solved() || trace.attempts.empty()) continue;
    const auto& final_attempt = trace.attempts.back();
    data.demonstrations.push_back({trace.instance_id, trace.table, final_attempt.explanation});
    if (trace.attempts.size() < 2) continue;
    const std::size_t last = trace.attempts.size() - 1;
    const std::size_t first_rejected = options.all_pairs ? 0 : last - 1;
    for (std::size_t i = last; i-- > first_rejected;) {
      if (trace.attempts[i].correct) continue;
      data.comparisons.push_back(
          {trace.instance_id, trace.table, final_attempt.explanation, trace.attempts[i].explanation});
    }
  }
  return data;
}

}  // namespace structex::reflect
