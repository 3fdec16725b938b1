// SPDX-License-Identifier: Apache-2.0
#include "structex/corpus.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "structex/error.hpp"
#include "structex/random.hpp"

namespace structex::corpus {

std::string Transcript::instance_id() const {
  return fmt::format("{}-{}", ticker, format_iso_date(call_date));
}

bool SpeakerFilter::is_executive(const std::string& speaker) const {
  std::string lowered;
  lowered.reserve(speaker.size());
  for (char c : speaker) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lowered.find_first_not_of(" \t") == std::string::npos) return false;
  return std::none_of(excluded_markers.begin(), excluded_markers.end(),
                      [&](const std::string& marker) {
                        return lowered.find(marker) != std::string::npos;
                      });
}

void validate(const Transcript& transcript, const SpeakerFilter& filter) {
  if (transcript.ticker.empty()) {
    throw Error(ErrorCode::kInvalidInput, "transcript has an empty ticker");
  }
  auto has_exec = [&](const std::vector<Speech>& speeches) {
    return std::any_of(speeches.begin(), speeches.end(), [&](const Speech& s) {
      return filter.is_executive(s.speaker);
    });
  };
  if (!has_exec(transcript.prepared_remarks) && !has_exec(transcript.qa_session)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("{}: no executive speech", transcript.instance_id()));
  }
}

PriceSeries::PriceSeries(std::vector<PriceRecord> records) : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const PriceRecord& a, const PriceRecord& b) { return a.date < b.date; });
}

std::optional<double> PriceSeries::close_on_or_after(const Date& date) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), date,
                             [](const PriceRecord& r, const Date& d) { return r.date < d; });
  if (it == records_.end()) return std::nullopt;
  return it->close;
}

PriceBook build_price_book(std::vector<PriceRecord> records) {
  std::map<std::string, std::vector<PriceRecord>> grouped;
  for (auto& record : records) {
    if (!(record.close > 0.0)) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("non-positive close for {} on {}", record.ticker,
                              format_iso_date(record.date)));
    }
    grouped[record.ticker].push_back(std::move(record));
  }
  PriceBook book;
  for (auto& [ticker, rows] : grouped) {
    PriceSeries series(std::move(rows));
    auto recs = series.records();
    for (std::size_t i = 1; i < recs.size(); ++i) {
      if (recs[i].date == recs[i - 1].date) {
        throw Error(ErrorCode::kInvalidInput,
                    fmt::format("duplicate price for {} on {}", ticker,
                                format_iso_date(recs[i].date)));
      }
    }
    book.emplace(ticker, std::move(series));
  }
  return book;
}

Decision label_for_return(double r, const Thresholds& thresholds) {
  const auto& t = thresholds.cuts;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i - 1] < t[i])) {
      throw Error(ErrorCode::kBadThresholds,
                  fmt::format("thresholds must be strictly ascending, got {}", fmt::join(t, ", ")));
    }
  }
  if (r <= t[0]) return Decision::kStronglySell;
  if (r <= t[1]) return Decision::kSell;
  if (r <= t[2]) return Decision::kHold;
  if (r <= t[3]) return Decision::kBuy;
  return Decision::kStronglyBuy;
}

Decision derive_label(const PriceSeries& prices, const Date& call_date, int horizon_days,
                      const Thresholds& thresholds) {
  const auto at = prices.close_on_or_after(call_date);
  if (!at) {
    throw Error(ErrorCode::kMissingPrice,
                fmt::format("no close on or after {}", format_iso_date(call_date)));
  }
  const Date horizon = add_days(call_date, horizon_days);
  const auto after = prices.close_on_or_after(horizon);
  if (!after) {
    throw Error(ErrorCode::kMissingPrice,
                fmt::format("no close on or after {}", format_iso_date(horizon)));
  }
  return label_for_return(*after / *at - 1.0, thresholds);
}

Split split_corpus(std::span<const Transcript> transcripts, const SplitOptions& options) {
  if (options.per_sector < 1) {
    throw Error(ErrorCode::kInvalidInput, "per_sector must be at least 1");
  }
  auto by_id = [](const Transcript& a, const Transcript& b) {
    return a.instance_id() < b.instance_id();
  };

  Split split;
  std::map<std::string, std::vector<Transcript>> candidates;
  for (const auto& t : transcripts) {
    if (t.call_date >= options.test_after) {
      split.test.push_back(t);
    } else {
      candidates[t.sector].push_back(t);
    }
  }

  Rng rng(options.seed);
  for (auto& [sector, pool] : candidates) {
    std::sort(pool.begin(), pool.end(), by_id);
    if (pool.size() < options.per_sector) {
      split.warnings.push_back(fmt::format("EmptySector: {} has {} of {} requested transcripts",
                                           sector, pool.size(), options.per_sector));
    }
    seeded_shuffle(std::span<Transcript>(pool), rng);
    const std::size_t take = std::min(pool.size(), options.per_sector);
    split.train.insert(split.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

}  // namespace structex::corpus
