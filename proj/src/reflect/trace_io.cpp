// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "structex/reflect.hpp"

namespace structex::reflect {
namespace {

Decision decision_from(const Json& node) {
  const auto code = node.get<std::string>();
  auto d = parse_short_code(code);
  if (!d) throw Error(ErrorCode::kInvalidInput, fmt::format("unknown decision code '{}'", code));
  return *d;
}

FactRange range_from(const Json& node) {
  return FactRange{node.at(0).get<int>(), node.at(1).get<int>()};
}

Json range_json(FactRange r) { return Json::array({r.lo, r.hi}); }

}  // namespace

Json to_json(const ReflectionTrace& trace) {
  Json attempts = Json::array();
  for (const auto& a : trace.attempts) {
    attempts.push_back({{"decision", short_code(a.explanation.decision)},
                        {"correct", a.correct},
                        {"constraint_violation", a.constraint_violation},
                        {"explanation", explanation::render_explanation(a.explanation)},
                        {"response", a.raw_response},
                        {"rejected_responses", a.rejected_responses}});
  }
  return Json{{"instance_id", trace.instance_id},
              {"gold", short_code(trace.gold)},
              {"fact_range", range_json(trace.range)},
              {"terminated", trace.solved() ? "Solved" : "Exhausted"},
              {"table", facttable::to_json(trace.table)},
              {"attempts", attempts}};
}

ReflectionTrace trace_from_json(const Json& node) {
  try {
    ReflectionTrace trace;
    trace.instance_id = node.at("instance_id").get<std::string>();
    trace.gold = decision_from(node.at("gold"));
    trace.range = range_from(node.at("fact_range"));
    trace.table = facttable::fact_table_from_json(node.at("table"));
    for (const auto& a : node.at("attempts")) {
      Attempt attempt;
      attempt.explanation =
          explanation::parse_explanation(a.at("explanation").get<std::string>(), trace.table, trace.range);
      attempt.correct = a.at("correct").get<bool>();
      attempt.constraint_violation = a.value("constraint_violation", false);
      attempt.raw_response = a.value("response", std::string{});
      attempt.rejected_responses = a.value("rejected_responses", std::vector<std::string>{});
      trace.attempts.push_back(std::move(attempt));
    }
    trace.terminated = node.at("terminated").get<std::string>() == "Solved" ? Termination::kSolved
                                                                            : Termination::kExhausted;
    return trace;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad trace record: {}", e.what()));
  }
}

std::vector<ReflectionTrace> load_traces(const std::filesystem::path& path) {
  std::vector<ReflectionTrace> out;
  for (const auto& node : read_jsonl(path)) out.push_back(trace_from_json(node));
  return out;
}

}  // namespace structex::reflect
