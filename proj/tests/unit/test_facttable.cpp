// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <cmath>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/facttable.hpp"
#include "structex/random.hpp"

using namespace structex;
using namespace structex::facttable;

namespace {

corpus::Transcript sample(int prepared, int qa) {
  corpus::Transcript t;
  t.ticker = "ACME";
  t.call_date = Date{std::chrono::year{2023}, std::chrono::May, std::chrono::day{2}};
  t.sector = "Industrials";
  t.prepared_remarks.push_back({"Operator", {"Welcome to the call."}});
  for (int i = 0; i < prepared; ++i) t.prepared_remarks.push_back({"Ann Smith, CEO", {fmt::format("remark {}", i)}});
  for (int i = 0; i < qa; ++i) {
    t.qa_session.push_back({"Bob, Analyst", {"question"}});
    t.qa_session.push_back({"Cy Jones, CFO", {fmt::format("answer {}", i)}});
  }
  t.metrics = {{1.0, 1.1, 1.2, 1.3}, {10, 10, 10, 10}, {50, 45, 40, 35}};
  return t;
}

// Three fixed lines per prepared speech, one per Q&A answer; echoes the
// speech text so ordering is observable.
backend::FunctionBackend lines_backend(std::atomic<int>* calls = nullptr) {
  return backend::FunctionBackend([calls](const backend::PromptTemplate&, const backend::Slots& s) {
    if (calls) ++*calls;
    const auto& speech = s.at("earnings-call-transcript");
    const auto open = speech.find("[\n") + 2;
    auto key = speech.substr(open, speech.find('\n', open) - open);
    if (s.at("number-of-facts") == "5") return fmt::format("- a {}\n- b {}\n- c {}\n", key, key, key);
    return fmt::format("1. only {}\n", key);
  });
}

// Normalized least-squares slope computed from the closed form with an
// explicit centered sum.
double oracle_slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double mx = (n - 1) / 2, my = 0;
  for (double v : y) my += v / n;
  double sxy = 0, sxx = 0, mag = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (static_cast<double>(i) - mx) * (y[i] - my);
    sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
    mag += std::abs(y[i]) / n;
  }
  return sxy / sxx / mag;
}

}  // namespace

TEST_CASE("fact budgets") {
  CHECK(fact_budget(Segment::kPreparedRemarks).min_facts == 3);
  CHECK(fact_budget(Segment::kPreparedRemarks).max_facts == 5);
  CHECK(fact_budget(Segment::kQA).min_facts == 1);
  CHECK(fact_budget(Segment::kQA).max_facts == 3);
  for (auto s : {Segment::kPreparedRemarks, Segment::kQA}) CHECK(fact_budget(s).min_facts <= fact_budget(s).max_facts);
}

TEST_CASE("distill counts, orders and indexes facts") {
  auto llm = lines_backend();
  const auto d = distill(sample(2, 0), llm, backend::default_templates().fact_table);
  REQUIRE(d.table.facts.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(d.table.facts[i].index == static_cast<int>(i + 1));
    CHECK(d.table.facts[i].origin == Segment::kPreparedRemarks);
  }
  CHECK(d.table.facts[0].content.find("remark 0") != std::string::npos);
  CHECK(d.table.facts[3].content.find("remark 1") != std::string::npos);
  CHECK(d.table.count(Segment::kQA) == 0);
  CHECK(d.report.speeches.size() == 2);
  CHECK(d.report.budget_violations() == 0);
}

TEST_CASE("distill skips non-executives and keeps prepared before Q&A") {
  std::atomic<int> calls{0};
  auto llm = lines_backend(&calls);
  const auto d = distill(sample(1, 2), llm, backend::default_templates().fact_table);
  CHECK(calls == 3);
  REQUIRE(d.table.facts.size() == 5);
  CHECK(d.table.facts[2].origin == Segment::kPreparedRemarks);
  CHECK(d.table.facts[3].origin == Segment::kQA);
  CHECK(d.table.facts[4].content.find("answer 1") != std::string::npos);
  CHECK(d.table.facts[3].speaker == "Cy Jones, CFO");
}

TEST_CASE("distill is order-stable under concurrency") {
  auto llm = lines_backend();
  DistillOptions serial;
  serial.max_in_flight = 1;
  DistillOptions wide;
  wide.max_in_flight = 8;
  const auto t = sample(5, 7);
  const auto a = distill(t, llm, backend::default_templates().fact_table, serial);
  const auto b = distill(t, llm, backend::default_templates().fact_table, wide);
  CHECK(a.table == b.table);
  CHECK(to_json(a.report) == to_json(b.report));
}

TEST_CASE("distill records budget violations and empty summaries") {
  backend::FunctionBackend llm([](const backend::PromptTemplate&, const backend::Slots& s) -> std::string {
    return s.at("number-of-facts") == "5" ? "one\n" : "";
  });
  const auto d = distill(sample(1, 1), llm, backend::default_templates().fact_table);
  CHECK(d.report.budget_violations() == 2);
  CHECK(d.report.empty_summaries() == 1);
  CHECK(d.table.facts.size() == 1);
}

TEST_CASE("distill names the failing speech") {
  backend::FunctionBackend llm([](const backend::PromptTemplate&, const backend::Slots& s) -> std::string {
    if (s.at("number-of-facts") == "3") throw std::runtime_error("boom");
    return "x\ny\nz\n";
  });
  try {
    distill(sample(1, 1), llm, backend::default_templates().fact_table);
    FAIL("expected BackendError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBackendError);
    CHECK(std::string(e.what()).find("qa#2") != std::string::npos);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("classify_metric examples") {
  const std::vector<double> flat = {5, 5, 5, 5};
  CHECK(classify_metric(flat, MetricKind::kEps) == MetricClass::kStable);
  const std::vector<double> doubling = {1, 2, 4, 8, 16};
  CHECK(classify_metric(doubling, MetricKind::kRevenueTrend) == MetricClass::kBullish);
  const std::vector<double> dip = {10, 9.9, 9.7, 9.4};
  CHECK(oracle_slope(dip) == doctest::Approx(-0.2 / 9.75).epsilon(1e-12));
  CHECK(oracle_slope(dip) < -0.02);
  CHECK(classify_metric(dip, MetricKind::kHistoricalPrice, 0.02) == MetricClass::kBearish);
  const std::vector<double> one = {3};
  CHECK_THROWS_AS(classify_metric(one, MetricKind::kEps), Error);
}

TEST_CASE("classify_metric agrees with the closed-form oracle and is sign-antisymmetric") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y;
    const std::size_t n = 2 + uniform_index(rng, 6);
    double v = 1 + 10 * uniform_unit(rng);
    const double step = (uniform_unit(rng) - 0.5) * 0.3 * v;
    for (std::size_t i = 0; i < n; ++i) y.push_back(v += step);
    if (std::abs(std::abs(oracle_slope(y)) - 0.02) < 1e-9) continue;
    const double s = oracle_slope(y);
    const auto expected = s > 0.02 ? MetricClass::kBullish : s < -0.02 ? MetricClass::kBearish : MetricClass::kStable;
    CHECK(classify_metric(y, MetricKind::kEps) == expected);
    std::vector<double> rev(y.rbegin(), y.rend());
    const auto flipped = classify_metric(rev, MetricKind::kEps);
    if (expected == MetricClass::kBullish) CHECK(flipped == MetricClass::kBearish);
    if (expected == MetricClass::kBearish) CHECK(flipped == MetricClass::kBullish);
    if (expected == MetricClass::kStable) CHECK(flipped == MetricClass::kStable);
  }
}

TEST_CASE("parse_fact_lines strips markers and headers") {
  const auto facts = parse_fact_lines("Facts:\n- Revenue rose 5%.\n\n* Margin fell.\n2. Guidance raised.\n  Debt flat.  \n");
  REQUIRE(facts.size() == 4);
  CHECK(facts[0] == "Revenue rose 5%.");
  CHECK(facts[1] == "Margin fell.");
  CHECK(facts[2] == "Guidance raised.");
  CHECK(facts[3] == "Debt flat.");
}

TEST_CASE("fact table text and json") {
  FactTable t;
  t.ticker = "ACME";
  t.facts = {{1, "Revenue rose.", Segment::kPreparedRemarks, "CEO"}, {2, "Costs fell.", Segment::kQA, "CFO"}};
  t.metric_classes = {MetricClass::kBullish, MetricClass::kStable, MetricClass::kBearish};
  const auto text = render_fact_table(t);
  CHECK(text.find("Company: ACME") == 0);
  CHECK(text.find("- EPS: Bullish") != std::string::npos);
  CHECK(text.find("- Historical Stock Price: Bearish") != std::string::npos);
  CHECK(text.find("[Fact 2] Costs fell.") != std::string::npos);
  CHECK(fact_table_from_json(to_json(t)) == t);

  auto bad = to_json(t);
  bad["facts"][1]["index"] = 5;
  CHECK_THROWS(fact_table_from_json(bad));
}

TEST_CASE("price fallback for the historical price class") {
  auto t = sample(1, 0);
  t.metrics.price.clear();
  std::vector<corpus::PriceRecord> rows;
  for (int k = 4; k >= 1; --k) {
    rows.push_back({"ACME", add_days(t.call_date, -91 * k), 100.0 + 10 * (4 - k)});
  }
  const auto book = corpus::build_price_book(rows);
  const auto classes = classify_transcript_metrics(t, {}, &book.at("ACME"));
  CHECK(classes[2] == MetricClass::kBullish);
}
