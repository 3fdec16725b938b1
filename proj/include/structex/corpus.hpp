// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "structex/jsonl.hpp"
#include "structex/labels.hpp"

namespace structex::corpus {

struct Speech {
  std::string speaker;
  std::vector<std::string> paragraphs;

  bool operator==(const Speech&) const = default;
};

// Historical series consumed by the metric classifier, oldest first.
struct MetricHistory {
  std::vector<double> eps;
  std::vector<double> revenue;
  std::vector<double> price;

  bool operator==(const MetricHistory&) const = default;
};

struct Transcript {
  std::string ticker;
  Date call_date;
  std::string sector;
  std::vector<Speech> prepared_remarks;
  std::vector<Speech> qa_session;
  MetricHistory metrics;

  // "<ticker>-<yyyy-mm-dd>"; unique per call.
  [[nodiscard]] std::string instance_id() const;

  bool operator==(const Transcript&) const = default;
};

// Operators, investor-relations hosts and analysts are not executives; their
// speeches are dropped before distillation.
struct SpeakerFilter {
  std::vector<std::string> excluded_markers = {"operator", "analyst",
                                               "investor relations"};

  [[nodiscard]] bool is_executive(const std::string& speaker) const;
};

// Throws InvalidInput when a structural invariant fails (empty ticker, no
// executive speech).
void validate(const Transcript& transcript, const SpeakerFilter& filter = {});

struct PriceRecord {
  std::string ticker;
  Date date;
  double close = 0.0;
};

// Closes for one ticker, sorted by date, dates unique.
class PriceSeries {
 public:
  PriceSeries() = default;
  explicit PriceSeries(std::vector<PriceRecord> records);

  // First close on or after `date`; nullopt past the end of the series.
  [[nodiscard]] std::optional<double> close_on_or_after(const Date& date) const;
  [[nodiscard]] std::span<const PriceRecord> records() const { return records_; }

 private:
  std::vector<PriceRecord> records_;
};

using PriceBook = std::map<std::string, PriceSeries>;

// Groups records by ticker. Throws InvalidInput on a non-positive close or a
// duplicate (ticker, date).
PriceBook build_price_book(std::vector<PriceRecord> records);

struct Thresholds {
  std::array<double, 4> cuts = {-0.10, -0.02, 0.02, 0.10};

  bool operator==(const Thresholds&) const = default;
};

// Maps a return through the four ascending cuts: r <= t1 -> SS, ..., r > t4 -> SB.
Decision label_for_return(double r, const Thresholds& thresholds);

Decision derive_label(const PriceSeries& prices, const Date& call_date,
                      int horizon_days, const Thresholds& thresholds = {});

struct SplitOptions {
  std::size_t per_sector = 100;
  Date test_after{std::chrono::year{2024}, std::chrono::January, std::chrono::day{1}};
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Transcript> train;
  std::vector<Transcript> test;
  std::vector<std::string> warnings;
};

Split split_corpus(std::span<const Transcript> transcripts, const SplitOptions& options);

inline const std::vector<std::string>& default_sectors() {
  static const std::vector<std::string> sectors = {
      "Communication Services", "Consumer Discretionary", "Consumer Staples",
      "Energy", "Financials", "Health Care", "Industrials",
      "Information Technology", "Materials", "Real Estate", "Utilities"};
  return sectors;
}

// --- line-delimited I/O ---

Json to_json(const Transcript& transcript);
Transcript transcript_from_json(const Json& record);

// Reads one transcript per line and validates each against the sector list.
std::vector<Transcript> load_transcripts(const std::filesystem::path& path,
                                         const std::vector<std::string>& sectors =
                                             default_sectors());

// CSV with header row: ticker,date,close.
std::vector<PriceRecord> parse_prices_csv(std::string_view text);
std::vector<PriceRecord> load_prices(const std::filesystem::path& path);
std::string format_prices_csv(std::span<const PriceRecord> records);

}  // namespace structex::corpus
