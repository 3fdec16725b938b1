// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "structex/explanation.hpp"

namespace structex::explanation {

std::string Strength::symbol() const {
  return std::string(static_cast<std::size_t>(magnitude), sign == Sign::kPositive ? '+' : '-');
}

std::string render_explanation(const StructuredExplanation& e) {
  std::string out = "Selected Facts with Assigned Strength:\n";
  for (const auto& f : e.selected) {
    out += fmt::format("- [Fact {}] | {}: {}\n", f.fact_index, f.content, f.strength.symbol());
  }
  out += fmt::format("\nDecision: {}\n\nJustification: {}\n", long_name(e.decision), e.justification);
  return out;
}

}  // namespace structex::explanation
