// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace structex {

// The five investment decisions. Enumerator order is the canonical index
// order used for one-hot blocks, confusion matrices and policy logits.
enum class Decision : int {
  kStronglyBuy = 0,
  kBuy = 1,
  kHold = 2,
  kSell = 3,
  kStronglySell = 4,
};

inline constexpr std::size_t kNumDecisions = 5;

inline constexpr std::array<Decision, kNumDecisions> kAllDecisions = {
    Decision::kStronglyBuy, Decision::kBuy, Decision::kHold, Decision::kSell,
    Decision::kStronglySell};

constexpr std::size_t index_of(Decision d) { return static_cast<std::size_t>(d); }
constexpr Decision decision_at(std::size_t i) { return static_cast<Decision>(i); }

// Bullishness rank: SS=0 < S < H < B < SB=4.
constexpr int bullish_rank(Decision d) { return 4 - static_cast<int>(d); }

// "SB", "B", "H", "S", "SS".
std::string_view short_code(Decision d);
// "Strongly Buy", ..., "Strongly Sell".
std::string_view long_name(Decision d);

std::optional<Decision> parse_short_code(std::string_view code);

// Case-insensitive match on the long names. Accepts "Strong Buy"/"Strong Sell"
// as synonyms. Anything else is rejected.
std::optional<Decision> parse_decision_name(std::string_view text);

using Date = std::chrono::year_month_day;

std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& date);
Date add_days(const Date& date, int days);

}  // namespace structex
