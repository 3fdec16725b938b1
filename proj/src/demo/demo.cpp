// SPDX-License-Identifier: Apache-2.0
#include "structex/demo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/facttable.hpp"
#include "structex/hashing.hpp"
#include "structex/jsonl.hpp"
#include "structex/random.hpp"
#include "structex/reflect.hpp"

namespace structex::demo {
namespace {

Rng keyed_rng(std::uint64_t seed, std::string_view key) {
  const auto digest = sha256_hex(fmt::format("{}|{}", seed, key));
  return Rng(std::stoull(digest.substr(0, 16), nullptr, 16));
}

template <std::size_t N>
std::size_t weighted(Rng& rng, const std::array<double, N>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform_unit(rng) * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return N - 1;
}

double between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

std::string fact_sentence(Rng& rng) {
  const double p = std::round(between(rng, 2, 35));
  const double x = std::round(between(rng, 1, 40) * 10) / 10;
  const int bp = static_cast<int>(uniform_index(rng, 250)) + 20;
  switch (uniform_index(rng, 14)) {
    case 0: return fmt::format("Revenue grew {}% year over year to ${} billion.", p, x);
    case 1: return fmt::format("Gross margin contracted by {} basis points on higher input costs.", bp);
    case 2: return fmt::format("Free cash flow reached ${} billion, up {}% from the prior year.", x, p);
    case 3: return fmt::format("Operating expenses rose {}% as the company expanded headcount.", p);
    case 4: return fmt::format("Full-year earnings guidance was raised to ${} per share.", x);
    case 5: return "Supply constraints are expected to weigh on next quarter's shipments.";
    case 6: return fmt::format("Backlog increased {}% to a record ${} billion.", p, x);
    case 7: return fmt::format("The board authorized a ${} billion share repurchase program.", x);
    case 8: return fmt::format("Net debt rose to ${} billion after the acquisition closed.", x);
    case 9: return fmt::format("Customer churn ticked up to {}% in the quarter.", std::round(p / 3));
    case 10: return fmt::format("Subscription revenue now represents {}% of total sales.", p + 20);
    case 11: return fmt::format("Inventory levels declined {}% sequentially.", p);
    case 12: return fmt::format("Operating margin expanded {} basis points to {}%.", bp, p);
    default: return fmt::format("Demand in the largest region softened, with orders down {}%.", p);
  }
}

std::string make_ticker(std::size_t i) {
  std::string t;
  std::size_t v = i + 26 * 26;  // at least three letters
  while (v > 0) {
    t.insert(t.begin(), static_cast<char>('A' + v % 26));
    v /= 26;
  }
  return t;
}

corpus::Speech make_speech(Rng& rng, std::string speaker, int paragraphs) {
  corpus::Speech s{std::move(speaker), {}};
  for (int p = 0; p < paragraphs; ++p) s.paragraphs.push_back(fact_sentence(rng) + " " + fact_sentence(rng));
  return s;
}

std::vector<double> series(Rng& rng, double start, std::size_t n) {
  const double drift = between(rng, -0.08, 0.08);
  std::vector<double> out;
  double v = start;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(std::round(v * 100) / 100);
    v *= 1.0 + drift + between(rng, -0.02, 0.02);
  }
  return out;
}

double planted_return(Rng& rng, Decision gold) {
  switch (gold) {
    case Decision::kStronglyBuy: return between(rng, 0.12, 0.20);
    case Decision::kBuy: return between(rng, 0.03, 0.09);
    case Decision::kHold: return between(rng, -0.015, 0.015);
    case Decision::kSell: return between(rng, -0.09, -0.03);
    case Decision::kStronglySell: return between(rng, -0.20, -0.12);
  }
  return 0.0;
}

const std::array<std::string_view, 5> kExecutives = {
    "Dana Whitfield, Chief Executive Officer", "Marcus Lee, Chief Financial Officer",
    "Priya Raman, Chief Operating Officer", "Tom Alvarez, President", "Grace Okafor, Chief Technology Officer"};

struct ParsedTable {
  std::string ticker;
  std::vector<std::string> facts;
};

ParsedTable parse_table_text(const std::string& text) {
  static const std::regex fact_line(R"(^\[Fact (\d+)\] (.*)$)");
  ParsedTable out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    std::smatch m;
    if (line.rfind("Company: ", 0) == 0) {
      out.ticker = line.substr(9);
    } else if (std::regex_match(line, m, fact_line)) {
      out.facts.push_back(m[2]);
    }
    start = end + 1;
  }
  return out;
}

int history_rounds(const std::string& history) {
  static const std::regex output_line(R"((^|\n)Output (\d+):)");
  int rounds = 0;
  for (auto it = std::sregex_iterator(history.begin(), history.end(), output_line); it != std::sregex_iterator();
       ++it) {
    rounds = std::max(rounds, std::stoi((*it)[2]));
  }
  return rounds;
}

explanation::FactRange parse_range(const std::string& text) {
  explanation::FactRange r;
  if (std::sscanf(text.c_str(), "%d-%d", &r.lo, &r.hi) != 2) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad fact range '{}'", text));
  }
  return r;
}

const std::string& slot(const backend::Slots& slots, const std::string& key) {
  const auto it = slots.find(key);
  if (it == slots.end()) throw Error(ErrorCode::kMissingSlot, fmt::format("planner needs slot '{}'", key));
  return it->second;
}

}  // namespace

DemoCorpus make_corpus(const DemoOptions& options) {
  if (options.instances == 0) throw Error(ErrorCode::kInvalidInput, "demo needs at least one instance");
  DemoCorpus demo;
  Rng rng(options.seed);
  const auto& sectors = corpus::default_sectors();
  constexpr std::array<double, 5> gold_weights = {0.15, 0.25, 0.25, 0.2, 0.15};
  for (std::size_t i = 0; i < options.instances; ++i) {
    corpus::Transcript t;
    t.ticker = make_ticker(i * 7 + 3);
    t.sector = sectors[i % sectors.size()];
    const int year = 2022 + static_cast<int>(i % 3);
    const unsigned month = 2 + 3 * static_cast<unsigned>(uniform_index(rng, 4));
    const unsigned day = 5 + static_cast<unsigned>(uniform_index(rng, 20));
    t.call_date = Date{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};

    t.prepared_remarks.push_back(
        {"Operator", {"Good day and welcome to the quarterly earnings conference call."}});
    for (auto role : kExecutives) {
      t.prepared_remarks.push_back(make_speech(rng, std::string(role), 2));
    }
    for (int q = 0; q < 7; ++q) {
      t.qa_session.push_back({fmt::format("Analyst {}", q + 1), {"Could you give more color on the quarter?"}});
      t.qa_session.push_back(make_speech(rng, std::string(kExecutives[q % 2]), 1));
    }
    t.metrics.eps = series(rng, between(rng, 0.5, 4.0), 6);
    t.metrics.revenue = series(rng, between(rng, 1.0, 30.0), 6);
    t.metrics.price = series(rng, between(rng, 20.0, 300.0), 6);

    const auto gold = decision_at(weighted(rng, gold_weights));
    const double close = t.metrics.price.back();
    const double r = planted_return(rng, gold);
    demo.prices.push_back({t.ticker, t.call_date, close});
    demo.prices.push_back({t.ticker, add_days(t.call_date, options.horizon_days), std::round(close * (1 + r) * 100) / 100});
    demo.gold_by_ticker[t.ticker] = gold;
    demo.transcripts.push_back(std::move(t));
  }
  return demo;
}

PlannerBackend::PlannerBackend(std::map<std::string, Decision> gold_by_ticker, const DemoOptions& options)
    : gold_(std::move(gold_by_ticker)), options_(options) {}

std::vector<Decision> PlannerBackend::planned_path(const std::string& ticker, explanation::FactRange range) const {
  const auto it = gold_.find(ticker);
  if (it == gold_.end()) throw Error(ErrorCode::kInvalidInput, fmt::format("planner has no label for {}", ticker));
  const Decision gold = it->second;
  Rng rng = keyed_rng(options_.seed, fmt::format("path|{}|{}", ticker, explanation::format_range(range)));

  std::array<double, 5> weights = {0.2, 0.2, 0.2, 0.2, 0.2};
  if (range == explanation::FactRange{6, 10}) weights = {0.35, 0.3, 0.2, 0.1, 0.05};
  if (range == explanation::FactRange{3, 6}) weights = {0.2, 0.25, 0.25, 0.15, 0.15};
  if (range == explanation::FactRange{10, 15}) weights = {0.25, 0.25, 0.2, 0.15, 0.15};
  const auto solve_at = std::min<std::size_t>(weighted(rng, weights), static_cast<std::size_t>(std::max(0, options_.max_reflections)));

  std::vector<Decision> wrong;
  for (auto d : kAllDecisions) {
    if (d != gold) wrong.push_back(d);
  }
  seeded_shuffle(std::span<Decision>(wrong), rng);
  if (gold != Decision::kHold && uniform_unit(rng) < 0.6) {
    std::iter_swap(wrong.begin(), std::find(wrong.begin(), wrong.end(), Decision::kHold));
  }
  std::vector<Decision> path(wrong.begin(), wrong.begin() + static_cast<std::ptrdiff_t>(solve_at));
  path.push_back(gold);
  return path;
}

std::string PlannerBackend::facts_reply(const backend::Slots& slots) const {
  const int wanted = std::stoi(slot(slots, "number-of-facts"));
  Rng rng = keyed_rng(options_.seed, "facts|" + slot(slots, "earnings-call-transcript"));
  const int n = std::max(1, wanted - static_cast<int>(uniform_index(rng, 2)));
  std::string out = "Facts:\n";
  for (int i = 0; i < n; ++i) out += fmt::format("- {}\n", fact_sentence(rng));
  return out;
}

std::string PlannerBackend::explanation_reply(const std::string& fact_table, explanation::FactRange range,
                                              Decision decision, int round, bool repeat) const {
  const auto table = parse_table_text(fact_table);
  Rng rng = keyed_rng(options_.seed, fmt::format("explain|{}|{}|{}|{}", table.ticker,
                                                 explanation::format_range(range), round, repeat));
  const int available = static_cast<int>(table.facts.size());
  const int hi = std::min(range.hi, available);
  const int lo = std::min(range.lo, hi);
  const int count = lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));

  std::vector<int> indices(static_cast<std::size_t>(available));
  std::iota(indices.begin(), indices.end(), 1);
  seeded_shuffle(std::span<int>(indices), rng);
  indices.resize(static_cast<std::size_t>(count));
  std::sort(indices.begin(), indices.end());

  constexpr std::array<double, 5> positive_share = {0.95, 0.9, 0.8, 0.6, 0.5};
  explanation::StructuredExplanation e;
  e.decision = decision;
  int pos = 0;
  for (int idx : indices) {
    explanation::Strength s;
    s.sign = uniform_unit(rng) < positive_share[index_of(decision)] ? explanation::Sign::kPositive
                                                                    : explanation::Sign::kNegative;
    s.magnitude = 1 + static_cast<int>(weighted(rng, std::array<double, 3>{0.2, 0.5, 0.3}));
    pos += s.sign == explanation::Sign::kPositive;
    e.selected.push_back({idx, table.facts[static_cast<std::size_t>(idx - 1)], s});
  }
  if (count >= 2 && pos == 0) e.selected.front().strength.sign = explanation::Sign::kPositive;
  if (count >= 2 && pos == count) e.selected.back().strength.sign = explanation::Sign::kNegative;
  e.justification = fmt::format("Weighing the selected facts, the outlook for {} over the next month supports {}.",
                                table.ticker, long_name(decision));
  return explanation::render_explanation(e);
}

std::string PlannerBackend::do_complete(const backend::PromptTemplate& tpl, const backend::Slots& slots) {
  const auto& required = tpl.required_slots();
  if (required.contains("earnings-call-transcript")) return facts_reply(slots);

  const std::string& table_text = slot(slots, "fact-table");
  const auto range = parse_range(slot(slots, "fact-range"));
  const auto ticker = parse_table_text(table_text).ticker;
  const auto path = planned_path(ticker, range);
  const int last = static_cast<int>(path.size()) - 1;

  if (!required.contains("previous-incorrect-outputs")) {
    return explanation_reply(table_text, range, path.front(), 0, false);
  }
  const std::string& history = slot(slots, "previous-incorrect-outputs");
  const int round = history_rounds(history);
  const bool retried = history.find("(retry ") != std::string::npos;
  Rng rng = keyed_rng(options_.seed, fmt::format("repeat|{}|{}|{}", ticker, explanation::format_range(range), round));
  const bool repeat = !retried && round >= 1 && round <= last && uniform_unit(rng) < options_.repeat_probability;
  const Decision d = repeat ? path[static_cast<std::size_t>(round - 1)] : path[static_cast<std::size_t>(std::min(round, last))];
  return explanation_reply(table_text, range, d, round, repeat);
}

DemoFiles write_demo(const std::filesystem::path& dir, const DemoOptions& options) {
  std::filesystem::create_directories(dir);
  const auto demo = make_corpus(options);
  PlannerBackend planner(demo.gold_by_ticker, options);
  backend::RecordingBackend recorder(planner);
  const auto& templates = backend::default_templates();
  const auto book = corpus::build_price_book(demo.prices);

  std::vector<facttable::TableRecord> records;
  for (const auto& t : demo.transcripts) {
    const auto& prices = book.at(t.ticker);
    auto d = facttable::distill(t, recorder, templates.fact_table, {}, &prices);
    records.push_back({t.instance_id(), std::move(d.table), corpus::derive_label(prices, t.call_date, options.horizon_days)});
  }

  reflect::ReflectOptions ro;
  ro.max_reflections = options.max_reflections;
  std::vector<explanation::FactRange> ranges = {options.range, {3, 6}, {6, 10}, {10, 15}};
  for (const auto& range : ranges) {
    ro.range = range;
    reflect::run_traces(records, recorder, templates, ro);
  }

  DemoFiles files{dir / "transcripts.jsonl", dir / "prices.csv", dir / "script.jsonl", dir / "demo.conf"};
  std::vector<Json> lines;
  for (const auto& t : demo.transcripts) lines.push_back(corpus::to_json(t));
  write_jsonl(files.transcripts, lines);
  write_text_file(files.prices, corpus::format_prices_csv(demo.prices));
  lines.clear();
  for (const auto& e : recorder.entries()) lines.push_back(backend::to_json(e));
  write_jsonl(files.script, lines);
  write_text_file(files.config,
                  fmt::format("# offline demo configuration\n"
                              "seed = {}\n"
                              "corpus = transcripts.jsonl\n"
                              "prices = prices.csv\n"
                              "backend = scripted:script.jsonl\n"
                              "output_dir = out\n"
                              "horizon_days = {}\n"
                              "fact_range = {}\n"
                              "max_reflections = {}\n"
                              "sweep_ranges = 3-6,6-10,10-15\n",
                              options.seed, options.horizon_days, explanation::format_range(options.range),
                              options.max_reflections));
  return files;
}

}  // namespace structex::demo
