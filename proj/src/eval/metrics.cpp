// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/eval.hpp"

namespace structex::eval {
namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricReport macro_metrics(std::span<const Decision> gold, std::span<const Decision> pred,
                           const MetricOptions& options) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} gold labels but {} predictions", gold.size(), pred.size()));
  }
  if (gold.empty()) throw Error(ErrorCode::kInvalidInput, "no predictions to score");

  std::array<long, kNumDecisions> tp{}, support{}, predicted{};
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = index_of(gold[i]);
    const auto p = index_of(pred[i]);
    ++support[g];
    ++predicted[p];
    if (g == p) {
      ++tp[g];
      ++correct;
    }
  }

  MetricReport report;
  report.count = gold.size();
  report.accuracy = ratio(correct, static_cast<long>(gold.size()));
  int averaged = 0;
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  for (std::size_t c = 0; c < kNumDecisions; ++c) {
    auto& s = report.per_class[c];
    s.support = static_cast<int>(support[c]);
    s.predicted = static_cast<int>(predicted[c]);
    s.precision_undefined = predicted[c] == 0;
    s.recall_undefined = support[c] == 0;
    s.precision = ratio(tp[c], predicted[c]);
    s.recall = ratio(tp[c], support[c]);
    s.f1 = harmonic(s.precision, s.recall);
    const bool observed = support[c] > 0 || predicted[c] > 0;
    if (options.classes == MacroClasses::kAll || observed) {
      ++averaged;
      sum_p += s.precision;
      sum_r += s.recall;
      sum_f += s.f1;
    }
  }
  report.precision = sum_p / averaged;
  report.recall = sum_r / averaged;
  report.f1 = options.f1 == F1Definition::kMeanOfPerClass ? sum_f / averaged
                                                          : harmonic(report.precision, report.recall);
  return report;
}

std::string format_metrics(const MetricReport& report) {
  std::string out = fmt::format("{:<6}{:>10}{:>10}{:>10}{:>9}{:>11}\n", "class", "precision", "recall", "f1",
                                "support", "predicted");
  for (std::size_t c = 0; c < kNumDecisions; ++c) {
    const auto& s = report.per_class[c];
    out += fmt::format("{:<6}{:>10}{:>10.2f}{:>10.2f}{:>9}{:>11}\n", short_code(decision_at(c)),
                       s.precision_undefined ? std::string("n/a") : fmt::format("{:.2f}", 100.0 * s.precision),
                       100.0 * s.recall, 100.0 * s.f1, s.support, s.predicted);
  }
  out += fmt::format("\nmacro precision  {:.2f}\nmacro recall     {:.2f}\nmacro f1         {:.2f}\n"
                     "accuracy         {:.2f}\ninstances        {}\n",
                     100.0 * report.precision, 100.0 * report.recall, 100.0 * report.f1,
                     100.0 * report.accuracy, report.count);
  return out;
}

Json to_json(const MetricReport& report) {
  Json per_class = Json::object();
  for (std::size_t c = 0; c < kNumDecisions; ++c) {
    const auto& s = report.per_class[c];
    per_class[std::string(short_code(decision_at(c)))] = {
        {"precision", s.precision},         {"recall", s.recall},
        {"f1", s.f1},                       {"support", s.support},
        {"predicted", s.predicted},         {"precision_undefined", s.precision_undefined},
        {"recall_undefined", s.recall_undefined}};
  }
  return {{"precision", report.precision}, {"recall", report.recall}, {"f1", report.f1},
          {"accuracy", report.accuracy},   {"count", report.count},   {"per_class", per_class}};
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

long ConfusionMatrix::diagonal() const {
  long t = 0;
  for (std::size_t i = 0; i < kNumDecisions; ++i) t += counts[i][i];
  return t;
}

long ConfusionMatrix::row_sum(Decision gold) const {
  const auto& row = counts[index_of(gold)];
  return std::accumulate(row.begin(), row.end(), 0L);
}

Decision decision_at_round(const reflect::ReflectionTrace& trace, int round) {
  if (round < 0) throw Error(ErrorCode::kInvalidInput, "round must be nonnegative");
  if (trace.attempts.empty()) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("trace {} has no attempts", trace.instance_id));
  }
  const auto last = trace.attempts.size() - 1;
  return trace.attempts[std::min<std::size_t>(static_cast<std::size_t>(round), last)].explanation.decision;
}

ConfusionMatrix confusion_by_round(std::span<const reflect::ReflectionTrace> traces, int round) {
  ConfusionMatrix m;
  for (const auto& t : traces) ++m.counts[index_of(t.gold)][index_of(decision_at_round(t, round))];
  return m;
}

std::string format_confusion(const ConfusionMatrix& matrix) {
  std::string out = fmt::format("{:<9}", "gold\\pred");
  for (auto d : kAllDecisions) out += fmt::format("{:>6}", short_code(d));
  out += '\n';
  for (std::size_t g = 0; g < kNumDecisions; ++g) {
    out += fmt::format("{:<9}", short_code(decision_at(g)));
    for (std::size_t p = 0; p < kNumDecisions; ++p) out += fmt::format("{:>6}", matrix.counts[g][p]);
    out += '\n';
  }
  return out;
}

std::string confusion_csv(const ConfusionMatrix& matrix) {
  std::string out = "gold";
  for (auto d : kAllDecisions) out += fmt::format(",{}", short_code(d));
  out += '\n';
  for (std::size_t g = 0; g < kNumDecisions; ++g) {
    out += short_code(decision_at(g));
    for (std::size_t p = 0; p < kNumDecisions; ++p) out += fmt::format(",{}", matrix.counts[g][p]);
    out += '\n';
  }
  return out;
}

double random_baseline(std::span<const double> gold_distribution, BaselineScheme scheme) {
  if (gold_distribution.size() != kNumDecisions) {
    throw Error(ErrorCode::kBadDistribution, fmt::format("expected {} probabilities, got {}", kNumDecisions,
                                                         gold_distribution.size()));
  }
  double sum = 0.0;
  for (double p : gold_distribution) {
    if (!(p >= 0.0) || p > 1.0) throw Error(ErrorCode::kBadDistribution, fmt::format("bad probability {}", p));
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kBadDistribution, fmt::format("probabilities sum to {}, not 1", sum));
  }
  if (scheme == BaselineScheme::kUniform) return 1.0 / static_cast<double>(kNumDecisions);
  double s = 0.0;
  for (double p : gold_distribution) s += p * p;
  return s;
}

std::array<double, kNumDecisions> class_distribution(std::span<const Decision> gold) {
  std::array<double, kNumDecisions> out{};
  if (gold.empty()) throw Error(ErrorCode::kInvalidInput, "no gold labels");
  for (auto d : gold) out[index_of(d)] += 1.0;
  for (auto& v : out) v /= static_cast<double>(gold.size());
  return out;
}

}  // namespace structex::eval
