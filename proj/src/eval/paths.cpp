// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <utility>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/eval.hpp"

namespace structex::eval {
namespace {

std::vector<PathShare> top_paths(const std::map<std::vector<Decision>, long>& counts, Outcome outcome,
                                 std::size_t total, int top_k) {
  std::vector<std::pair<std::string, PathShare>> rows;
  for (const auto& [seq, n] : counts) {
    PathShare share{{seq, outcome}, n, 100.0 * static_cast<double>(n) / static_cast<double>(total)};
    rows.emplace_back(format_path(seq), std::move(share));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.first < b.first;
  });
  std::vector<PathShare> out;
  for (auto& [key, share] : rows) {
    if (out.size() == static_cast<std::size_t>(top_k)) break;
    out.push_back(std::move(share));
  }
  return out;
}

std::string_view outcome_name(Outcome o) { return o == Outcome::kCorrect ? "correct" : "incorrect"; }

}  // namespace

std::string format_path(std::span<const Decision> sequence) {
  std::string out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i) out += "→";
    out += short_code(sequence[i]);
  }
  return out;
}

PathReport mine_paths(std::span<const reflect::ReflectionTrace> traces, int top_k) {
  if (top_k < 1) throw Error(ErrorCode::kInvalidInput, "top_k must be at least 1");
  std::map<std::vector<Decision>, long> correct, incorrect;
  for (const auto& t : traces) {
    auto& bucket = t.solved() ? correct : incorrect;
    ++bucket[t.path()];
  }
  PathReport report;
  report.total = traces.size();
  if (traces.empty()) return report;
  report.correct = top_paths(correct, Outcome::kCorrect, traces.size(), top_k);
  report.incorrect = top_paths(incorrect, Outcome::kIncorrect, traces.size(), top_k);
  return report;
}

std::string format_paths(const PathReport& report) {
  std::string out = fmt::format("traces: {}\n", report.total);
  for (const auto* part : {&report.correct, &report.incorrect}) {
    const bool correct = part == &report.correct;
    out += fmt::format("\n{} paths\n{:<24}{:>8}{:>10}\n", correct ? "Correct" : "Incorrect", "path", "count",
                       "percent");
    if (part->empty()) out += "(none)\n";
    for (const auto& s : *part) {
      out += fmt::format("{:<24}{:>8}{:>9.1f}%\n", format_path(s.path.sequence), s.count, s.percentage);
    }
  }
  return out;
}

std::vector<Json> paths_to_jsonl(const PathReport& report) {
  std::vector<Json> out;
  for (const auto* part : {&report.correct, &report.incorrect}) {
    for (const auto& s : *part) {
      Json seq = Json::array();
      for (auto d : s.path.sequence) seq.push_back(std::string(short_code(d)));
      out.push_back({{"path", format_path(s.path.sequence)},
                     {"sequence", seq},
                     {"outcome", outcome_name(s.path.outcome)},
                     {"count", s.count},
                     {"percentage", s.percentage},
                     {"total", report.total}});
    }
  }
  return out;
}

}  // namespace structex::eval
