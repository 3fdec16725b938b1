// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <deque>
#include <set>

#include <fmt/format.h>

#include "structex/demo.hpp"
#include "structex/error.hpp"
#include "structex/reflect.hpp"
#include "support/fixtures.hpp"

using namespace structex;
using namespace structex::reflect;
using structex::testing::table_with_facts;

namespace {

std::string reply(Decision d, int n = 6) {
  explanation::StructuredExplanation e;
  for (int i = 1; i <= n; ++i) {
    e.selected.push_back({i, fmt::format("fact {}", i), {i == n ? explanation::Sign::kNegative : explanation::Sign::kPositive, 2}});
  }
  e.decision = d;
  e.justification = fmt::format("Because {}.", long_name(d));
  return explanation::render_explanation(e);
}

// Answers calls in order from a queue of decisions and logs the slots seen.
struct QueueBackend {
  std::deque<Decision> queue;
  std::vector<backend::Slots> seen;
  std::vector<std::string> templates;

  backend::FunctionBackend make() {
    return backend::FunctionBackend([this](const backend::PromptTemplate& t, const backend::Slots& s) {
      seen.push_back(s);
      templates.push_back(t.name());
      if (queue.empty()) throw std::runtime_error("queue exhausted");
      const auto d = queue.front();
      queue.pop_front();
      return reply(d);
    });
  }
};

}  // namespace

TEST_CASE("decision slots and decide_once") {
  const auto table = table_with_facts(12, "ACME");
  const auto slots = decision_slots(table, {6, 10});
  CHECK(slots.at("company-ticker") == "ACME");
  CHECK(slots.at("fact-range") == "6-10");
  CHECK(slots.at("fact-table") == facttable::render_fact_table(table));
  QueueBackend q{{Decision::kHold}};
  auto llm = q.make();
  const auto r = decide_once(table, llm, backend::default_templates().decision, {6, 10});
  CHECK(r.explanation.decision == Decision::kHold);
  CHECK(r.raw == reply(Decision::kHold));
}

TEST_CASE("trace solved on the first attempt makes no reflection call") {
  QueueBackend q{{Decision::kBuy}};
  auto llm = q.make();
  const auto t = run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), {});
  CHECK(t.solved());
  CHECK(t.attempts.size() == 1);
  CHECK(q.seen.size() == 1);
}

TEST_CASE("reflection sees every prior output and stops when correct") {
  QueueBackend q{{Decision::kHold, Decision::kBuy, Decision::kStronglyBuy}};
  auto llm = q.make();
  const auto t = run_trace("X", table_with_facts(12), Decision::kStronglyBuy, llm, backend::default_templates(), {});
  CHECK(t.solved());
  CHECK(t.path() == std::vector<Decision>{Decision::kHold, Decision::kBuy, Decision::kStronglyBuy});
  CHECK(q.templates == std::vector<std::string>{"decision", "reflection", "reflection"});
  const auto& history = q.seen[2].at("previous-incorrect-outputs");
  CHECK(history.find("Output 1:") != std::string::npos);
  CHECK(history.find("Output 2:") != std::string::npos);
  CHECK(history.find("Decision: Hold") != std::string::npos);
  CHECK(history.find("Decision: Buy") != std::string::npos);
  CHECK(t.attempts[0].correct == false);
  CHECK(t.attempts[2].correct == true);
}

TEST_CASE("a repeated decision is retried with a note and a distinct fingerprint") {
  QueueBackend q{{Decision::kHold, Decision::kHold, Decision::kBuy}};
  auto llm = q.make();
  const auto t = run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), {});
  CHECK(t.solved());
  REQUIRE(t.attempts.size() == 2);
  CHECK(t.attempts[1].rejected_responses.size() == 1);
  CHECK_FALSE(t.attempts[1].constraint_violation);
  const auto& tpl = backend::default_templates().reflection;
  CHECK(backend::fingerprint(tpl, q.seen[1]) != backend::fingerprint(tpl, q.seen[2]));
  CHECK(q.seen[2].at("previous-incorrect-outputs").find("retry 1 of 2") != std::string::npos);
}

TEST_CASE("exhausted retries accept the repeat and flag it") {
  QueueBackend q{{Decision::kHold, Decision::kHold, Decision::kHold, Decision::kHold}};
  auto llm = q.make();
  ReflectOptions o;
  o.max_reflections = 1;
  const auto t = run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), o);
  CHECK_FALSE(t.solved());
  REQUIRE(t.attempts.size() == 2);
  CHECK(t.attempts[1].constraint_violation);
  CHECK(t.attempts[1].rejected_responses.size() == 2);
}

TEST_CASE("without enforcement a repeat is taken as is") {
  QueueBackend q{{Decision::kHold, Decision::kHold}};
  auto llm = q.make();
  ReflectOptions o;
  o.max_reflections = 1;
  o.enforce_distinct = false;
  const auto t = run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), o);
  CHECK(t.attempts.size() == 2);
  CHECK_FALSE(t.attempts[1].constraint_violation);
  CHECK(t.attempts[1].rejected_responses.empty());
}

TEST_CASE("zero reflections means a single attempt") {
  QueueBackend q{{Decision::kHold}};
  auto llm = q.make();
  ReflectOptions o;
  o.max_reflections = 0;
  const auto t = run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), o);
  CHECK(t.attempts.size() == 1);
  CHECK(t.terminated == Termination::kExhausted);
}

TEST_CASE("a failure mid-trace carries the partial trace") {
  QueueBackend q{{Decision::kHold}};
  auto llm = q.make();
  try {
    run_trace("X", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), {});
    FAIL("expected TraceError");
  } catch (const TraceError& e) {
    CHECK(e.partial_trace().attempts.size() == 1);
    CHECK(std::string(e.what()).find("queue exhausted") != std::string::npos);
  }
  backend::FunctionBackend garbage([](const backend::PromptTemplate&, const backend::Slots&) { return "nonsense"; });
  CHECK_THROWS_AS(run_trace("Y", table_with_facts(12), Decision::kBuy, garbage, backend::default_templates(), {}),
                  TraceError);
}

TEST_CASE("history budget drops the oldest outputs but keeps the newest") {
  std::vector<explanation::StructuredExplanation> h;
  for (auto d : {Decision::kHold, Decision::kBuy, Decision::kSell}) {
    h.push_back(explanation::parse_explanation(reply(d), table_with_facts(12), {}));
  }
  const auto full = render_history(h, 1'000'000);
  CHECK(full.find("Output 1:") == 0);
  const auto trimmed = render_history(h, full.size() / 2);
  CHECK(trimmed.find("Output 1:") == std::string::npos);
  CHECK(trimmed.find("Output 3:") != std::string::npos);
  CHECK(trimmed.size() <= full.size() / 2 + 1);
  const auto tiny = render_history(h, 1);
  CHECK(tiny.find("Output 3:") == 0);
  CHECK(tiny.find("Output 2:") == std::string::npos);
}

TEST_CASE("every trace under the distinct-decision rule is solved within R+1 = 5 attempts") {
  demo::DemoOptions opts;
  opts.instances = 40;
  opts.repeat_probability = 0.5;
  const auto demo_corpus = demo::make_corpus(opts);
  demo::PlannerBackend planner(demo_corpus.gold_by_ticker, opts);
  std::vector<facttable::TableRecord> records;
  for (const auto& [ticker, gold] : demo_corpus.gold_by_ticker) {
    auto table = table_with_facts(20, ticker);
    records.push_back({ticker, table, gold});
  }
  const auto traces = run_traces(records, planner, backend::default_templates(), {}, 3);
  REQUIRE(traces.size() == records.size());
  int retried = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(traces[i].instance_id == records[i].instance_id);
    CHECK(traces[i].solved());
    CHECK(traces[i].attempts.size() <= 5);
    const auto p = traces[i].path();
    CHECK(std::set<Decision>(p.begin(), p.end()).size() == p.size());
    for (const auto& a : traces[i].attempts) retried += !a.rejected_responses.empty();
  }
  CHECK(retried > 0);
}

TEST_CASE("run_traces rejects unlabeled records") {
  std::vector<facttable::TableRecord> records = {{"A", table_with_facts(12), std::nullopt}};
  QueueBackend q;
  auto llm = q.make();
  CHECK_THROWS_AS(run_traces(records, llm, backend::default_templates(), {}), Error);
}

TEST_CASE("datasets: demonstrations are final answers, comparisons pair with the previous attempt") {
  using D = Decision;
  std::vector<ReflectionTrace> traces = {
      structex::testing::trace_from_path("a", {D::kBuy}, D::kBuy),
      structex::testing::trace_from_path("b", {D::kHold, D::kSell, D::kStronglySell}, D::kStronglySell),
      structex::testing::trace_from_path("c", {D::kHold, D::kBuy}, D::kSell),
  };
  const auto data = build_datasets(traces);
  REQUIRE(data.demonstrations.size() == 2);
  CHECK(data.demonstrations[1].output.decision == D::kStronglySell);
  REQUIRE(data.comparisons.size() == 1);
  CHECK(data.comparisons[0].instance_id == "b");
  CHECK(data.comparisons[0].preferred.decision == D::kStronglySell);
  CHECK(data.comparisons[0].rejected.decision == D::kSell);

  const auto all = build_datasets(traces, {true});
  CHECK(all.comparisons.size() == 2);
  CHECK(all.comparisons[1].rejected.decision == D::kHold);
}

TEST_CASE("trace and dataset json round trips") {
  QueueBackend q{{Decision::kHold, Decision::kHold, Decision::kBuy}};
  auto llm = q.make();
  const auto t = run_trace("X-2024-01-05", table_with_facts(12), Decision::kBuy, llm, backend::default_templates(), {});
  const auto back = trace_from_json(to_json(t));
  CHECK(back.instance_id == t.instance_id);
  CHECK(back.path() == t.path());
  CHECK(back.table == t.table);
  CHECK(back.attempts[1].rejected_responses == t.attempts[1].rejected_responses);
  CHECK(back.attempts[1].explanation == t.attempts[1].explanation);
  CHECK(back.terminated == t.terminated);
  CHECK(to_json(back) == to_json(t));

  const std::vector<ReflectionTrace> ts = {t};
  const auto data = build_datasets(ts);
  const auto demo = demonstration_from_json(to_json(data.demonstrations[0]));
  CHECK(demo.output == data.demonstrations[0].output);
  const auto pair = comparison_from_json(to_json(data.comparisons[0]));
  CHECK(pair.preferred == data.comparisons[0].preferred);
  CHECK(pair.rejected == data.comparisons[0].rejected);
}
