// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structex/backend.hpp"
#include "structex/explanation.hpp"
#include "structex/facttable.hpp"

namespace structex::reflect {

using explanation::FactRange;
using explanation::StructuredExplanation;

struct ReflectOptions {
  FactRange range;
  int max_reflections = 4;  // R; a trace holds at most 1 + R attempts
  int max_retries = 2;      // re-asks when a reflection repeats a decision
  bool enforce_distinct = true;
  std::size_t history_char_budget = 16000;  // oldest prior outputs dropped first
};

struct Response {
  StructuredExplanation explanation;
  std::string raw;
};

struct Attempt {
  StructuredExplanation explanation;
  bool correct = false;
  std::string raw_response;
  // Responses discarded because they repeated an earlier decision.
  std::vector<std::string> rejected_responses;
  // Accepted despite repeating an earlier decision after all retries.
  bool constraint_violation = false;
};

enum class Termination { kSolved, kExhausted };

struct ReflectionTrace {
  std::string instance_id;
  facttable::FactTable table;
  Decision gold = Decision::kHold;
  FactRange range;
  std::vector<Attempt> attempts;
  Termination terminated = Termination::kExhausted;

  [[nodiscard]] std::vector<Decision> path() const;
  [[nodiscard]] bool solved() const { return terminated == Termination::kSolved; }
};

class TraceError : public Error {
 public:
  TraceError(ReflectionTrace partial, const std::string& message)
      : Error(ErrorCode::kTraceError, message), partial_(std::move(partial)) {}

  [[nodiscard]] const ReflectionTrace& partial_trace() const { return partial_; }

 private:
  ReflectionTrace partial_;
};

backend::Slots decision_slots(const facttable::FactTable& table, FactRange range);

// Prior outputs as they appear in the reflection prompt, numbered oldest
// first and trimmed from the oldest end to `char_budget` (the newest output
// is always kept).
std::string render_history(std::span<const StructuredExplanation> history, std::size_t char_budget);

std::string retry_note(std::span<const StructuredExplanation> history, Decision repeated, int retry,
                       int max_retries);

backend::Slots reflection_slots(const facttable::FactTable& table,
                                std::span<const StructuredExplanation> history,
                                const ReflectOptions& options, const std::string& note = {});

// Fills the decision prompt and parses the reply. ParseError carries the raw
// response.
Response decide_once(const facttable::FactTable& table, backend::LlmBackend& llm,
                     const backend::PromptTemplate& tpl, FactRange range);

// Fills the reflection prompt with the table and every prior (incorrect)
// output. `correct` is left false; the caller knows the gold label.
Attempt reflect_once(const facttable::FactTable& table, std::span<const StructuredExplanation> history,
                     backend::LlmBackend& llm, const backend::PromptTemplate& tpl,
                     const ReflectOptions& options);

// Initial decision, then reflections until correct or R are used. Failures
// surface as TraceError holding the attempts made so far.
ReflectionTrace run_trace(const std::string& instance_id, const facttable::FactTable& table, Decision gold,
                          backend::LlmBackend& llm, const backend::TemplateSet& templates,
                          const ReflectOptions& options);

// Runs independent traces on up to `workers` threads; output order follows
// input order. Records without a gold label are rejected.
std::vector<ReflectionTrace> run_traces(std::span<const facttable::TableRecord> records,
                                        backend::LlmBackend& llm, const backend::TemplateSet& templates,
                                        const ReflectOptions& options, int workers = 1);

struct Demonstration {
  std::string instance_id;
  facttable::FactTable input;
  StructuredExplanation output;
};

struct ComparisonPair {
  std::string instance_id;
  facttable::FactTable input;
  StructuredExplanation preferred;
  StructuredExplanation rejected;
};

struct DatasetOptions {
  // Also pair the final answer against every earlier incorrect attempt.
  bool all_pairs = false;
};

struct Datasets {
  std::vector<Demonstration> demonstrations;
  std::vector<ComparisonPair> comparisons;
};

Datasets build_datasets(std::span<const ReflectionTrace> traces, const DatasetOptions& options = {});

Json to_json(const ReflectionTrace& trace);
ReflectionTrace trace_from_json(const Json& node);
std::vector<ReflectionTrace> load_traces(const std::filesystem::path& path);

Json to_json(const Demonstration& demo);
Demonstration demonstration_from_json(const Json& node);
Json to_json(const ComparisonPair& pair);
ComparisonPair comparison_from_json(const Json& node);

}  // namespace structex::reflect
