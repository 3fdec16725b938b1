// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <fmt/format.h>

#include <set>

#include "structex/corpus.hpp"
#include "structex/error.hpp"
#include "structex/jsonl.hpp"

using namespace structex;
using namespace structex::corpus;

namespace {

Date day(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

Transcript make(std::string ticker, Date date, std::string sector) {
  Transcript t;
  t.ticker = std::move(ticker);
  t.call_date = date;
  t.sector = std::move(sector);
  t.prepared_remarks = {{"Operator", {"Welcome."}}, {"Jane Roe, CEO", {"Sales rose."}}};
  t.qa_session = {{"Analyst, Big Bank", {"Margins?"}}, {"John Doe, CFO", {"Up 2%."}}};
  return t;
}

}  // namespace

TEST_CASE("label_for_return on the default bands") {
  const Thresholds t;
  CHECK(label_for_return(0.0, t) == Decision::kHold);
  CHECK(label_for_return(0.15, t) == Decision::kStronglyBuy);
  CHECK(label_for_return(-0.10, t) == Decision::kStronglySell);
  CHECK(label_for_return(-0.02, t) == Decision::kSell);
  CHECK(label_for_return(0.02, t) == Decision::kHold);
  CHECK(label_for_return(0.10, t) == Decision::kBuy);
  CHECK(label_for_return(0.1000001, t) == Decision::kStronglyBuy);
}

TEST_CASE("derive_label from planted closes") {
  // 80 -> 76 is a 5% loss
  PriceSeries s({{"XYZ", day(2023, 5, 1), 80.0}, {"XYZ", day(2023, 5, 31), 76.0}});
  CHECK(derive_label(s, day(2023, 5, 1), 30) == Decision::kSell);
}

TEST_CASE("derive_label rolls forward to the next close") {
  PriceSeries s({{"XYZ", day(2023, 5, 2), 100.0}, {"XYZ", day(2023, 6, 5), 120.0}});
  CHECK(derive_label(s, day(2023, 4, 29), 30) == Decision::kStronglyBuy);
}

TEST_CASE("derive_label errors") {
  PriceSeries s({{"XYZ", day(2023, 5, 1), 100.0}});
  CHECK_THROWS_AS(derive_label(s, day(2023, 5, 1), 30), Error);
  try {
    derive_label(s, day(2023, 5, 1), 30);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPrice);
  }
  PriceSeries both({{"XYZ", day(2023, 5, 1), 100.0}, {"XYZ", day(2023, 6, 1), 100.0}});
  Thresholds bad;
  bad.cuts = {-0.1, 0.02, 0.02, 0.1};
  try {
    derive_label(both, day(2023, 5, 1), 30, bad);
    FAIL("expected BadThresholds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadThresholds);
  }
}

TEST_CASE("label function is monotone and reaches all five labels") {
  const Thresholds t;
  std::set<Decision> seen;
  int prev = -1;
  for (int i = -300; i <= 300; ++i) {
    const double r = i / 1000.0;
    const auto d = label_for_return(r, t);
    seen.insert(d);
    const int rank = bullish_rank(d);
    CHECK(rank >= prev);
    prev = rank;
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("price book rejects bad rows") {
  CHECK_THROWS(build_price_book({{"A", day(2023, 1, 1), 0.0}}));
  CHECK_THROWS(build_price_book({{"A", day(2023, 1, 1), 1.0}, {"A", day(2023, 1, 1), 2.0}}));
  CHECK(build_price_book({{"A", day(2023, 1, 1), 1.0}, {"B", day(2023, 1, 1), 2.0}}).size() == 2);
}

TEST_CASE("prices csv round trip") {
  const std::vector<PriceRecord> rows = {{"AAA", day(2023, 1, 3), 12.5}, {"BBB", day(2024, 2, 29), 101.25}};
  const auto parsed = parse_prices_csv(format_prices_csv(rows));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].ticker == "BBB");
  CHECK(parsed[1].date == day(2024, 2, 29));
  CHECK(parsed[1].close == doctest::Approx(101.25));
}

TEST_CASE("speaker filter keeps executives only") {
  SpeakerFilter f;
  CHECK(f.is_executive("Jane Roe, Chief Executive Officer"));
  CHECK(f.is_executive("Priya Raman, Chief Operating Officer"));
  CHECK_FALSE(f.is_executive("Operator"));
  CHECK_FALSE(f.is_executive("Sam Lee, Analyst"));
  CHECK_FALSE(f.is_executive("Head of Investor Relations"));
}

TEST_CASE("validate requires a ticker and an executive") {
  auto t = make("AAA", day(2023, 1, 1), "Energy");
  CHECK_NOTHROW(validate(t));
  t.ticker.clear();
  CHECK_THROWS(validate(t));
  auto u = make("AAA", day(2023, 1, 1), "Energy");
  u.prepared_remarks = {{"Operator", {"hi"}}};
  u.qa_session = {{"Analyst", {"q"}}};
  CHECK_THROWS(validate(u));
}

TEST_CASE("split counts, boundary and determinism") {
  std::vector<Transcript> all;
  for (const char* sector : {"Energy", "Utilities", "Materials"}) {
    for (int i = 0; i < 5; ++i) all.push_back(make(fmt::format("{}{}", sector[0], i), day(2023, 3, 1 + i), sector));
  }
  SplitOptions opts;
  opts.per_sector = 2;
  opts.seed = 11;
  const auto a = split_corpus(all, opts);
  CHECK(a.train.size() == 6);
  CHECK(a.test.empty());
  CHECK(a.warnings.empty());
  const auto b = split_corpus(all, opts);
  REQUIRE(b.train.size() == a.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].instance_id() == b.train[i].instance_id());

  std::vector<Transcript> late;
  for (int i = 0; i < 4; ++i) late.push_back(make(fmt::format("L{}", i), day(2024, 2, 1 + i), "Energy"));
  const auto c = split_corpus(late, opts);
  CHECK(c.train.empty());
  CHECK(c.test.size() == 4);
}

TEST_CASE("split warns on thin sectors and keeps sets disjoint") {
  std::vector<Transcript> all = {make("A", day(2023, 1, 1), "Energy"), make("B", day(2024, 1, 1), "Energy")};
  SplitOptions opts;
  opts.per_sector = 3;
  const auto s = split_corpus(all, opts);
  CHECK(s.train.size() == 1);
  CHECK(s.test.size() == 1);
  CHECK_FALSE(s.warnings.empty());
  CHECK(s.train[0].instance_id() != s.test[0].instance_id());
}

TEST_CASE("transcript json round trip and sector check") {
  const auto t = make("AAA", day(2023, 1, 1), "Energy");
  CHECK(transcript_from_json(to_json(t)) == t);
  auto odd = make("AAA", day(2023, 1, 1), "Space Mining");
  const auto path = std::filesystem::temp_directory_path() / "structex_odd_sector.jsonl";
  write_jsonl(path, {to_json(odd)});
  CHECK_THROWS(load_transcripts(path));
  std::filesystem::remove(path);
}
