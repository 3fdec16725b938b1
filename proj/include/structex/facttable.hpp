// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structex/backend.hpp"
#include "structex/corpus.hpp"
#include "structex/jsonl.hpp"
#include "structex/labels.hpp"

namespace structex::facttable {

enum class Segment { kPreparedRemarks, kQA };

std::string_view to_string(Segment segment);

struct Budget {
  int min_facts = 0;
  int max_facts = 0;
};

// Prepared remarks: 3-5 facts per speech. Q&A answers: 1-3.
constexpr Budget fact_budget(Segment segment) {
  return segment == Segment::kPreparedRemarks ? Budget{3, 5} : Budget{1, 3};
}

struct Fact {
  int index = 0;  // 1-based, contiguous within a table
  std::string content;
  Segment origin = Segment::kPreparedRemarks;
  std::string speaker;

  bool operator==(const Fact&) const = default;
};

enum class MetricKind { kEps = 0, kRevenueTrend = 1, kHistoricalPrice = 2 };
enum class MetricClass { kBullish = 0, kStable = 1, kBearish = 2 };

inline constexpr std::array<MetricKind, 3> kAllMetricKinds = {
    MetricKind::kEps, MetricKind::kRevenueTrend, MetricKind::kHistoricalPrice};

std::string_view to_string(MetricKind kind);
std::string_view display_name(MetricKind kind);
std::string_view to_string(MetricClass cls);

struct FactTable {
  std::string ticker;
  std::vector<Fact> facts;
  // Indexed by MetricKind.
  std::array<MetricClass, 3> metric_classes = {MetricClass::kStable, MetricClass::kStable,
                                               MetricClass::kStable};

  [[nodiscard]] MetricClass metric(MetricKind kind) const {
    return metric_classes[static_cast<std::size_t>(kind)];
  }
  [[nodiscard]] std::size_t count(Segment segment) const;

  bool operator==(const FactTable&) const = default;
};

// Least-squares slope over x = 0..n-1, divided by the mean absolute value of
// the series. Above +tau -> Bullish, below -tau -> Bearish, else Stable.
// Throws InsufficientHistory with fewer than two points.
MetricClass classify_metric(std::span<const double> history, MetricKind kind, double tau = 0.02);

// One fact per nonempty line; leading list markers ("-", "*", "1.", ...) are
// stripped and a bare "Facts:" header line is skipped.
std::vector<std::string> parse_fact_lines(std::string_view response);

// The speech as it is spliced into the fact-table prompt.
std::string render_speech(const corpus::Speech& speech);

// Canonical text form used inside decision/reflection prompts and datasets.
std::string render_fact_table(const FactTable& table);

struct SpeechReport {
  std::string speech_id;  // e.g. "prepared-remarks#2"
  std::string speaker;
  Segment segment = Segment::kPreparedRemarks;
  int facts = 0;
  Budget budget;
  [[nodiscard]] bool within_budget() const {
    return facts >= budget.min_facts && facts <= budget.max_facts;
  }
  [[nodiscard]] bool empty() const { return facts == 0; }
};

struct DistillReport {
  std::string instance_id;
  std::vector<SpeechReport> speeches;

  [[nodiscard]] std::size_t budget_violations() const;
  [[nodiscard]] std::size_t empty_summaries() const;
};

struct DistillOptions {
  corpus::SpeakerFilter filter;
  double tau = 0.02;
  std::size_t lookback = 4;  // most recent points fed to classify_metric
  int max_in_flight = 4;
};

struct Distillation {
  FactTable table;
  DistillReport report;
};

// One backend call per executive speech, possibly concurrent; assembly is in
// transcript order. `prices` backs the historical-price metric when the
// transcript carries no price history.
Distillation distill(const corpus::Transcript& transcript, backend::LlmBackend& llm,
                     const backend::PromptTemplate& tpl, const DistillOptions& options = {},
                     const corpus::PriceSeries* prices = nullptr);

// The three historical-metric classes for a transcript.
std::array<MetricClass, 3> classify_transcript_metrics(const corpus::Transcript& transcript,
                                                       const DistillOptions& options,
                                                       const corpus::PriceSeries* prices);

Json to_json(const FactTable& table);
FactTable fact_table_from_json(const Json& node);
Json to_json(const DistillReport& report);

// A fact table plus bookkeeping as stored in facts.jsonl.
struct TableRecord {
  std::string instance_id;
  FactTable table;
  std::optional<Decision> gold;
};

Json to_json(const TableRecord& record);
TableRecord table_record_from_json(const Json& node);
std::vector<TableRecord> load_table_records(const std::filesystem::path& path);

}  // namespace structex::facttable
