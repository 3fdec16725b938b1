// SPDX-License-Identifier: Apache-2.0
#include "structex/labels.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace structex {
namespace {

std::string lower_collapsed(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view short_code(Decision d) {
  switch (d) {
    case Decision::kStronglyBuy: return "SB";
    case Decision::kBuy: return "B";
    case Decision::kHold: return "H";
    case Decision::kSell: return "S";
    case Decision::kStronglySell: return "SS";
  }
  return "?";
}

std::string_view long_name(Decision d) {
  switch (d) {
    case Decision::kStronglyBuy: return "Strongly Buy";
    case Decision::kBuy: return "Buy";
    case Decision::kHold: return "Hold";
    case Decision::kSell: return "Sell";
    case Decision::kStronglySell: return "Strongly Sell";
  }
  return "?";
}

std::optional<Decision> parse_short_code(std::string_view code) {
  for (Decision d : kAllDecisions) {
    if (short_code(d) == code) return d;
  }
  return std::nullopt;
}

std::optional<Decision> parse_decision_name(std::string_view text) {
  const std::string key = lower_collapsed(text);
  if (key == "strongly buy" || key == "strong buy") return Decision::kStronglyBuy;
  if (key == "buy") return Decision::kBuy;
  if (key == "hold") return Decision::kHold;
  if (key == "sell") return Decision::kSell;
  if (key == "strongly sell" || key == "strong sell") return Decision::kStronglySell;
  return std::nullopt;
}

std::optional<Date> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
  };
  if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(const Date& date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()),
                     static_cast<unsigned>(date.day()));
}

Date add_days(const Date& date, int days) {
  return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

}  // namespace structex
