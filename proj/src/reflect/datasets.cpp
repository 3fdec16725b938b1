// SPDX-License-Identifier: Apache-2.0
#include <climits>

#include <fmt/format.h>

#include "structex/reflect.hpp"

namespace structex::reflect {
namespace {

// Dataset records carry already-validated explanations; reloading only needs
// the format, not the original range.
constexpr FactRange kAnyCount{0, INT_MAX};

}  // namespace

Json to_json(const Demonstration& demo) {
  return Json{{"instance_id", demo.instance_id},
              {"input", facttable::render_fact_table(demo.input)},
              {"output", explanation::render_explanation(demo.output)},
              {"decision", short_code(demo.output.decision)},
              {"table", facttable::to_json(demo.input)}};
}

Demonstration demonstration_from_json(const Json& node) {
  try {
    Demonstration d;
    d.instance_id = node.at("instance_id").get<std::string>();
    d.input = facttable::fact_table_from_json(node.at("table"));
    d.output = explanation::parse_explanation(node.at("output").get<std::string>(), d.input, kAnyCount);
    return d;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad demonstration record: {}", e.what()));
  }
}

Json to_json(const ComparisonPair& pair) {
  return Json{{"instance_id", pair.instance_id},
              {"input", facttable::render_fact_table(pair.input)},
              {"preferred", explanation::render_explanation(pair.preferred)},
              {"rejected", explanation::render_explanation(pair.rejected)},
              {"preferred_decision", short_code(pair.preferred.decision)},
              {"rejected_decision", short_code(pair.rejected.decision)},
              {"table", facttable::to_json(pair.input)}};
}

ComparisonPair comparison_from_json(const Json& node) {
  try {
    ComparisonPair p;
    p.instance_id = node.at("instance_id").get<std::string>();
    p.input = facttable::fact_table_from_json(node.at("table"));
    p.preferred = explanation::parse_explanation(node.at("preferred").get<std::string>(), p.input, kAnyCount);
    p.rejected = explanation::parse_explanation(node.at("rejected").get<std::string>(), p.input, kAnyCount);
    return p;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad comparison record: {}", e.what()));
  }
}

}  // namespace structex::reflect
