// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "structex/explanation.hpp"

namespace structex::explanation {

StatsReport fact_statistics(std::span<const StructuredExplanation> explanations,
                            std::span<const facttable::FactTable> tables) {
  if (explanations.size() != tables.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} explanations vs {} tables", explanations.size(), tables.size()));
  }
  StatsReport report;
  report.instances = explanations.size();
  if (report.instances == 0) return report;

  // Integer tallies keep the means exact up to the final division.
  long long total_facts = 0;
  long long selected = 0;
  long long favorable = 0;
  long long adverse = 0;
  std::array<long long, 3> fav_mag{};
  std::array<long long, 3> adv_mag{};
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    total_facts += static_cast<long long>(tables[i].facts.size());
    selected += static_cast<long long>(explanations[i].selected.size());
    for (const auto& f : explanations[i].selected) {
      const auto slot = static_cast<std::size_t>(f.strength.magnitude - 1);
      if (f.strength.sign == Sign::kPositive) {
        ++favorable;
        ++fav_mag[slot];
      } else {
        ++adverse;
        ++adv_mag[slot];
      }
    }
  }
  const auto n = static_cast<double>(report.instances);
  report.mean_total_facts = static_cast<double>(total_facts) / n;
  report.mean_selected = static_cast<double>(selected) / n;
  report.mean_favorable = static_cast<double>(favorable) / n;
  report.mean_adverse = static_cast<double>(adverse) / n;
  for (std::size_t m = 0; m < 3; ++m) {
    report.favorable_by_magnitude[m] = static_cast<double>(fav_mag[m]) / n;
    report.adverse_by_magnitude[m] = static_cast<double>(adv_mag[m]) / n;
  }
  return report;
}

std::string format_stats(const StatsReport& r) {
  std::string out;
  out += fmt::format("{:<40}{:>10}\n", "Instances", r.instances);
  out += fmt::format("{:<40}{:>10.2f}\n", "Total Number of Facts Per Transcript", r.mean_total_facts);
  out += fmt::format("{:<40}{:>10.2f}\n", "Num of Supporting Facts Per Transcript", r.mean_selected);
  out += fmt::format("{:<40}{:>10.2f}\n", "Num of Favorable Supporting Facts", r.mean_favorable);
  out += fmt::format("{:<40}{:>10}\n", "Favorable Facts with Strengths 1 to 3",
                     fmt::format("{:.2f} / {:.2f} / {:.2f}", r.favorable_by_magnitude[0],
                                 r.favorable_by_magnitude[1], r.favorable_by_magnitude[2]));
  out += fmt::format("{:<40}{:>10.2f}\n", "Number of Adverse Supporting Facts", r.mean_adverse);
  out += fmt::format("{:<40}{:>10}\n", "Adverse Facts with Strengths 1 to 3",
                     fmt::format("{:.2f} / {:.2f} / {:.2f}", r.adverse_by_magnitude[0],
                                 r.adverse_by_magnitude[1], r.adverse_by_magnitude[2]));
  return out;
}

Json to_json(const StatsReport& r) {
  return Json{{"instances", r.instances},
              {"mean_total_facts", r.mean_total_facts},
              {"mean_selected", r.mean_selected},
              {"mean_favorable", r.mean_favorable},
              {"mean_adverse", r.mean_adverse},
              {"favorable_by_magnitude", r.favorable_by_magnitude},
              {"adverse_by_magnitude", r.adverse_by_magnitude}};
}

}  // namespace structex::explanation
