// SPDX-License-Identifier: Apache-2.0
#include "structex/facttable.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "structex/error.hpp"

namespace structex::facttable {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_list_marker(std::string_view line) {
  if (line.starts_with("- ") || line.starts_with("* ") || line.starts_with("+ ")) {
    return trim(line.substr(2));
  }
  if (line.starts_with("•")) return trim(line.substr(3));  // bullet
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    return trim(line.substr(digits + 1));
  }
  return line;
}

struct Job {
  const corpus::Speech* speech;
  Segment segment;
  std::string speech_id;
};

}  // namespace

std::string_view to_string(Segment segment) {
  return segment == Segment::kPreparedRemarks ? "PreparedRemarks" : "QA";
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEps: return "EPS";
    case MetricKind::kRevenueTrend: return "RevenueTrend";
    case MetricKind::kHistoricalPrice: return "HistoricalPrice";
  }
  return "?";
}

std::string_view display_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEps: return "EPS";
    case MetricKind::kRevenueTrend: return "Revenue Trend";
    case MetricKind::kHistoricalPrice: return "Historical Stock Price";
  }
  return "?";
}

std::string_view to_string(MetricClass cls) {
  switch (cls) {
    case MetricClass::kBullish: return "Bullish";
    case MetricClass::kStable: return "Stable";
    case MetricClass::kBearish: return "Bearish";
  }
  return "?";
}

std::size_t FactTable::count(Segment segment) const {
  return static_cast<std::size_t>(std::count_if(
      facts.begin(), facts.end(), [&](const Fact& f) { return f.origin == segment; }));
}

MetricClass classify_metric(std::span<const double> history, MetricKind kind, double tau) {
  if (history.size() < 2) {
    throw Error(ErrorCode::kInsufficientHistory,
                fmt::format("{} needs at least 2 points, got {}", to_string(kind), history.size()));
  }
  const double n = static_cast<double>(history.size());
  const double x_mean = (n - 1.0) / 2.0;
  const double y_mean = std::accumulate(history.begin(), history.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (history[i] - y_mean);
    sxx += dx * dx;
    magnitude += std::abs(history[i]);
  }
  magnitude /= n;
  if (magnitude == 0.0) return MetricClass::kStable;
  const double normalized = (sxy / sxx) / magnitude;
  if (normalized > tau) return MetricClass::kBullish;
  if (normalized < -tau) return MetricClass::kBearish;
  return MetricClass::kStable;
}

std::vector<std::string> parse_fact_lines(std::string_view response) {
  std::vector<std::string> facts;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    const std::size_t end = std::min(response.find('\n', pos), response.size());
    auto line = trim(response.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    std::string_view lowered_probe = line;
    if (lowered_probe == "Facts:" || lowered_probe == "facts:") continue;
    line = strip_list_marker(line);
    if (!line.empty()) facts.emplace_back(line);
  }
  return facts;
}

std::string render_speech(const corpus::Speech& speech) {
  std::string out = fmt::format("\"name\": {},\n\"speech\": [\n", Json(speech.speaker).dump());
  for (std::size_t i = 0; i < speech.paragraphs.size(); ++i) {
    out += fmt::format("    {}{}\n", Json(speech.paragraphs[i]).dump(),
                       i + 1 < speech.paragraphs.size() ? "," : "");
  }
  out += "]";
  return out;
}

std::string render_fact_table(const FactTable& table) {
  std::string out = fmt::format("Company: {}\nHistorical Metrics:\n", table.ticker);
  for (MetricKind kind : kAllMetricKinds) {
    out += fmt::format("- {}: {}\n", display_name(kind), to_string(table.metric(kind)));
  }
  out += "Facts:\n";
  for (const auto& fact : table.facts) out += fmt::format("[Fact {}] {}\n", fact.index, fact.content);
  return out;
}

std::size_t DistillReport::budget_violations() const {
  return static_cast<std::size_t>(std::count_if(speeches.begin(), speeches.end(),
                                                [](const SpeechReport& s) { return !s.within_budget(); }));
}

std::size_t DistillReport::empty_summaries() const {
  return static_cast<std::size_t>(
      std::count_if(speeches.begin(), speeches.end(), [](const SpeechReport& s) { return s.empty(); }));
}

std::array<MetricClass, 3> classify_transcript_metrics(const corpus::Transcript& transcript,
                                                       const DistillOptions& options,
                                                       const corpus::PriceSeries* prices) {
  auto recent = [&](const std::vector<double>& series) {
    const std::size_t keep = std::min(series.size(), options.lookback);
    return std::vector<double>(series.end() - static_cast<std::ptrdiff_t>(keep), series.end());
  };
  std::vector<double> price = recent(transcript.metrics.price);
  if (price.empty() && prices != nullptr) {
    // One close per quarter before the call, oldest first.
    for (std::size_t k = options.lookback; k >= 1; --k) {
      const Date when = add_days(transcript.call_date, -91 * static_cast<int>(k));
      if (auto close = prices->close_on_or_after(when)) price.push_back(*close);
    }
  }
  auto classify = [&](const std::vector<double>& series, MetricKind kind) {
    try {
      return classify_metric(series, kind, options.tau);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}: {}", transcript.instance_id(), e.what()));
    }
  };
  return {classify(recent(transcript.metrics.eps), MetricKind::kEps),
          classify(recent(transcript.metrics.revenue), MetricKind::kRevenueTrend),
          classify(price, MetricKind::kHistoricalPrice)};
}

Distillation distill(const corpus::Transcript& transcript, backend::LlmBackend& llm,
                     const backend::PromptTemplate& tpl, const DistillOptions& options,
                     const corpus::PriceSeries* prices) {
  std::vector<Job> jobs;
  auto collect = [&](const std::vector<corpus::Speech>& speeches, Segment segment, const char* tag) {
    for (std::size_t i = 0; i < speeches.size(); ++i) {
      if (!options.filter.is_executive(speeches[i].speaker)) continue;
      jobs.push_back(Job{&speeches[i], segment, fmt::format("{}#{}", tag, i + 1)});
    }
  };
  collect(transcript.prepared_remarks, Segment::kPreparedRemarks, "prepared-remarks");
  collect(transcript.qa_session, Segment::kQA, "qa");

  std::vector<std::vector<std::string>> outputs(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const Budget budget = fact_budget(job.segment);
      try {
        const std::string response =
            llm.complete(tpl, {{"company-ticker", transcript.ticker},
                               {"number-of-facts", std::to_string(budget.max_facts)},
                               {"earnings-call-transcript", render_speech(*job.speech)}});
        outputs[i] = parse_fact_lines(response);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(jobs.size(), static_cast<std::size_t>(std::max(1, options.max_in_flight)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kBackendError,
                  fmt::format("{} {} ({}): {}", transcript.instance_id(), jobs[i].speech_id,
                              jobs[i].speech->speaker, e.what()));
    }
  }

  Distillation result;
  result.table.ticker = transcript.ticker;
  result.table.metric_classes = classify_transcript_metrics(transcript, options, prices);
  result.report.instance_id = transcript.instance_id();
  int index = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (auto& content : outputs[i]) {
      result.table.facts.push_back(Fact{++index, std::move(content), jobs[i].segment, jobs[i].speech->speaker});
    }
    result.report.speeches.push_back(SpeechReport{jobs[i].speech_id, jobs[i].speech->speaker,
                                                  jobs[i].segment, static_cast<int>(outputs[i].size()),
                                                  fact_budget(jobs[i].segment)});
  }
  return result;
}

Json to_json(const FactTable& table) {
  Json facts = Json::array();
  for (const auto& f : table.facts) {
    facts.push_back({{"index", f.index},
                     {"content", f.content},
                     {"origin", to_string(f.origin)},
                     {"speaker", f.speaker}});
  }
  Json metrics = Json::object();
  for (MetricKind kind : kAllMetricKinds) metrics[std::string(to_string(kind))] = to_string(table.metric(kind));
  return Json{{"ticker", table.ticker}, {"facts", facts}, {"metrics", metrics}};
}

FactTable fact_table_from_json(const Json& node) {
  try {
    FactTable table;
    table.ticker = node.at("ticker").get<std::string>();
    for (const auto& f : node.at("facts")) {
      const auto origin = f.at("origin").get<std::string>();
      if (origin != "PreparedRemarks" && origin != "QA") {
        throw Error(ErrorCode::kInvalidInput, fmt::format("unknown fact origin '{}'", origin));
      }
      table.facts.push_back(Fact{f.at("index").get<int>(), f.at("content").get<std::string>(),
                                 origin == "QA" ? Segment::kQA : Segment::kPreparedRemarks,
                                 f.value("speaker", std::string{})});
    }
    for (std::size_t i = 0; i < table.facts.size(); ++i) {
      if (table.facts[i].index != static_cast<int>(i + 1)) {
        throw Error(ErrorCode::kInvalidInput, "fact indices must be contiguous from 1");
      }
    }
    const auto& metrics = node.at("metrics");
    for (MetricKind kind : kAllMetricKinds) {
      const auto value = metrics.at(std::string(to_string(kind))).get<std::string>();
      MetricClass cls;
      if (value == "Bullish") cls = MetricClass::kBullish;
      else if (value == "Stable") cls = MetricClass::kStable;
      else if (value == "Bearish") cls = MetricClass::kBearish;
      else throw Error(ErrorCode::kInvalidInput, fmt::format("unknown metric class '{}'", value));
      table.metric_classes[static_cast<std::size_t>(kind)] = cls;
    }
    return table;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad fact table: {}", e.what()));
  }
}

Json to_json(const DistillReport& report) {
  Json speeches = Json::array();
  for (const auto& s : report.speeches) {
    speeches.push_back({{"speech", s.speech_id},
                        {"speaker", s.speaker},
                        {"segment", to_string(s.segment)},
                        {"facts", s.facts},
                        {"budget", {s.budget.min_facts, s.budget.max_facts}},
                        {"within_budget", s.within_budget()},
                        {"empty_summary", s.empty()}});
  }
  return Json{{"instance_id", report.instance_id},
              {"budget_violations", report.budget_violations()},
              {"empty_summaries", report.empty_summaries()},
              {"speeches", speeches}};
}

Json to_json(const TableRecord& record) {
  Json j{{"instance_id", record.instance_id}, {"table", to_json(record.table)}};
  if (record.gold) j["gold"] = short_code(*record.gold);
  return j;
}

TableRecord table_record_from_json(const Json& node) {
  TableRecord record;
  try {
    record.instance_id = node.at("instance_id").get<std::string>();
    record.table = fact_table_from_json(node.at("table"));
    if (node.contains("gold") && !node.at("gold").is_null()) {
      const auto code = node.at("gold").get<std::string>();
      record.gold = parse_short_code(code);
      if (!record.gold) throw Error(ErrorCode::kInvalidInput, fmt::format("unknown gold label '{}'", code));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad fact-table record: {}", e.what()));
  }
  return record;
}

std::vector<TableRecord> load_table_records(const std::filesystem::path& path) {
  std::vector<TableRecord> out;
  for (const auto& node : read_jsonl(path)) out.push_back(table_record_from_json(node));
  return out;
}

}  // namespace structex::facttable
