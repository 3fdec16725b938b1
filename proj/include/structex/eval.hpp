// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "structex/backend.hpp"
#include "structex/jsonl.hpp"
#include "structex/labels.hpp"
#include "structex/reflect.hpp"

namespace structex::eval {

// Which classes enter the macro average.
enum class MacroClasses {
  kObserved,  // classes present in gold or predictions
  kAll,       // all five; unseen classes count as 0
};

enum class F1Definition {
  kMeanOfPerClass,  // average of per-class F1
  kOfMacroAverages,  // harmonic mean of macro precision and macro recall
};

struct MetricOptions {
  MacroClasses classes = MacroClasses::kObserved;
  F1Definition f1 = F1Definition::kMeanOfPerClass;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;    // gold count
  int predicted = 0;  // predicted count
  bool precision_undefined = false;  // never predicted
  bool recall_undefined = false;     // never in gold
};

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
  std::array<ClassScores, kNumDecisions> per_class{};
};

MetricReport macro_metrics(std::span<const Decision> gold, std::span<const Decision> pred,
                           const MetricOptions& options = {});

std::string format_metrics(const MetricReport& report);
Json to_json(const MetricReport& report);

struct ConfusionMatrix {
  // rows gold, columns predicted, SB..SS order
  std::array<std::array<long, kNumDecisions>, kNumDecisions> counts{};

  [[nodiscard]] long total() const;
  [[nodiscard]] long diagonal() const;
  [[nodiscard]] long row_sum(Decision gold) const;
};

// Decision at `round` (0 = initial); traces that stopped earlier contribute
// their last decision.
Decision decision_at_round(const reflect::ReflectionTrace& trace, int round);

ConfusionMatrix confusion_by_round(std::span<const reflect::ReflectionTrace> traces, int round);

std::string format_confusion(const ConfusionMatrix& matrix);
std::string confusion_csv(const ConfusionMatrix& matrix);

enum class Outcome { kCorrect, kIncorrect };

struct DecisionPath {
  std::vector<Decision> sequence;
  Outcome outcome = Outcome::kIncorrect;

  bool operator==(const DecisionPath&) const = default;
};

std::string format_path(std::span<const Decision> sequence);  // "B→H→SB"

struct PathShare {
  DecisionPath path;
  long count = 0;
  double percentage = 0.0;  // of all traces, 0..100
};

struct PathReport {
  std::size_t total = 0;
  std::vector<PathShare> correct;
  std::vector<PathShare> incorrect;
};

// Top `top_k` paths per outcome, by count over all traces; ties go to the
// lexicographically smaller path string.
PathReport mine_paths(std::span<const reflect::ReflectionTrace> traces, int top_k);

std::string format_paths(const PathReport& report);
std::vector<Json> paths_to_jsonl(const PathReport& report);

enum class BaselineScheme { kUniform, kMatched };

double random_baseline(std::span<const double> gold_distribution, BaselineScheme scheme);

// Empirical class frequencies of `gold`.
std::array<double, kNumDecisions> class_distribution(std::span<const Decision> gold);

struct RangeCurve {
  explanation::FactRange range;
  // Cumulative fraction solved after rounds 0..R.
  std::vector<double> solve_rate;
  std::vector<reflect::ReflectionTrace> traces;
};

std::vector<explanation::FactRange> default_sweep_ranges();  // 3-6, 6-10, 10-15

// Fraction of traces solved by `round`, for rounds 0..max_reflections.
std::vector<double> cumulative_solve_rate(std::span<const reflect::ReflectionTrace> traces, int max_reflections);

std::vector<RangeCurve> sweep_fact_ranges(std::span<const facttable::TableRecord> corpus, backend::LlmBackend& llm,
                                          const backend::TemplateSet& templates,
                                          std::span<const explanation::FactRange> ranges,
                                          const reflect::ReflectOptions& base, int workers = 1);

std::string format_sweep(std::span<const RangeCurve> curves);
std::vector<Json> sweep_to_jsonl(std::span<const RangeCurve> curves);

}  // namespace structex::eval
