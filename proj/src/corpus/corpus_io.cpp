// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "structex/corpus.hpp"
#include "structex/error.hpp"

namespace structex::corpus {
namespace {

Json speeches_to_json(const std::vector<Speech>& speeches) {
  Json out = Json::array();
  for (const auto& s : speeches) out.push_back({{"speaker", s.speaker}, {"speech", s.paragraphs}});
  return out;
}

std::vector<Speech> speeches_from_json(const Json& node) {
  std::vector<Speech> out;
  if (node.is_null()) return out;
  for (const auto& item : node) {
    Speech s;
    s.speaker = item.contains("speaker") ? item.at("speaker").get<std::string>()
                                         : item.at("name").get<std::string>();
    const auto& speech = item.at("speech");
    if (speech.is_string()) {
      s.paragraphs.push_back(speech.get<std::string>());
    } else {
      s.paragraphs = speech.get<std::vector<std::string>>();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> series_or_empty(const Json& metrics, const char* key) {
  if (!metrics.is_object() || !metrics.contains(key)) return {};
  return metrics.at(key).get<std::vector<double>>();
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Json to_json(const Transcript& t) {
  Json metrics = Json::object();
  if (!t.metrics.eps.empty()) metrics["eps"] = t.metrics.eps;
  if (!t.metrics.revenue.empty()) metrics["revenue"] = t.metrics.revenue;
  if (!t.metrics.price.empty()) metrics["price"] = t.metrics.price;
  return Json{{"ticker", t.ticker},
              {"call_date", format_iso_date(t.call_date)},
              {"sector", t.sector},
              {"prepared_remarks", speeches_to_json(t.prepared_remarks)},
              {"qa_session", speeches_to_json(t.qa_session)},
              {"metrics", metrics}};
}

Transcript transcript_from_json(const Json& record) {
  try {
    Transcript t;
    t.ticker = record.at("ticker").get<std::string>();
    const auto date_text = record.at("call_date").get<std::string>();
    const auto date = parse_iso_date(date_text);
    if (!date) throw Error(ErrorCode::kInvalidInput, fmt::format("bad call_date '{}'", date_text));
    t.call_date = *date;
    t.sector = record.value("sector", std::string{});
    t.prepared_remarks = speeches_from_json(record.value("prepared_remarks", Json{}));
    t.qa_session = speeches_from_json(record.value("qa_session", Json{}));
    const Json metrics = record.value("metrics", Json::object());
    t.metrics.eps = series_or_empty(metrics, "eps");
    t.metrics.revenue = series_or_empty(metrics, "revenue");
    t.metrics.price = series_or_empty(metrics, "price");
    return t;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad transcript record: {}", e.what()));
  }
}

std::vector<Transcript> load_transcripts(const std::filesystem::path& path,
                                         const std::vector<std::string>& sectors) {
  std::vector<Transcript> out;
  for (const auto& record : read_jsonl(path)) {
    Transcript t = transcript_from_json(record);
    if (!sectors.empty() && std::find(sectors.begin(), sectors.end(), t.sector) == sectors.end()) {
      throw Error(ErrorCode::kUnknownSector,
                  fmt::format("{}: sector '{}' is not in the configured list", t.instance_id(), t.sector));
    }
    validate(t);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PriceRecord> parse_prices_csv(std::string_view text) {
  std::vector<PriceRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (line_no == 1) continue;  // header
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("prices:{}: expected ticker,date,close", line_no));
    }
    PriceRecord rec;
    rec.ticker = std::string(trim(row.substr(0, c1)));
    const auto date = parse_iso_date(trim(row.substr(c1 + 1, c2 - c1 - 1)));
    if (!date) throw Error(ErrorCode::kInvalidInput, fmt::format("prices:{}: bad date", line_no));
    rec.date = *date;
    const auto close_text = trim(row.substr(c2 + 1));
    auto [ptr, ec] = std::from_chars(close_text.data(), close_text.data() + close_text.size(), rec.close);
    if (ec != std::errc{} || ptr != close_text.data() + close_text.size()) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("prices:{}: bad close", line_no));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<PriceRecord> load_prices(const std::filesystem::path& path) {
  return parse_prices_csv(read_text_file(path));
}

std::string format_prices_csv(std::span<const PriceRecord> records) {
  std::string out = "ticker,date,close\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{:.4f}\n", r.ticker, format_iso_date(r.date), r.close);
  }
  return out;
}

}  // namespace structex::corpus
