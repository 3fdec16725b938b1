// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structex/error.hpp"
#include "structex/facttable.hpp"
#include "structex/labels.hpp"

namespace structex::explanation {

enum class Sign { kPositive, kNegative };

struct Strength {
  Sign sign = Sign::kPositive;
  int magnitude = 1;  // 1..3

  // "+", "++", "+++", "-", "--" or "---".
  [[nodiscard]] std::string symbol() const;
  [[nodiscard]] int signed_value() const { return sign == Sign::kPositive ? magnitude : -magnitude; }

  bool operator==(const Strength&) const = default;
};

struct SelectedFact {
  int fact_index = 0;
  std::string content;
  Strength strength;

  bool operator==(const SelectedFact&) const = default;
};

struct StructuredExplanation {
  std::vector<SelectedFact> selected;
  Decision decision = Decision::kHold;
  std::string justification;

  bool operator==(const StructuredExplanation&) const = default;
};

// Inclusive bounds on the number of selected facts.
struct FactRange {
  int lo = 6;
  int hi = 10;

  bool operator==(const FactRange&) const = default;
};

std::string format_range(FactRange range);  // "6-10"

enum class DiagnosticCode {
  kMissingSection,
  kUnknownLabel,
  kBadStrength,
  kFactIndexOutOfRange,
  kCountOutOfRange,
  kEmptyContent,
  kEmptyJustification,
  kUnbalanced,
  kSignSkew,
  kDuplicateFact,
  kUnrecognizedLine,
};

std::string_view to_string(DiagnosticCode code);

struct Diagnostic {
  int line = 0;  // 1-based; 0 when the finding is not tied to a line
  DiagnosticCode code = DiagnosticCode::kMissingSection;
  std::string message;
};

std::string format_diagnostics(std::span<const Diagnostic> diagnostics);

class ParseError : public Error {
 public:
  ParseError(std::vector<Diagnostic> diagnostics, std::string raw_text);

  [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  [[nodiscard]] const std::string& raw_text() const { return raw_text_; }

 private:
  std::vector<Diagnostic> diagnostics_;
  std::string raw_text_;
};

struct ParseOutcome {
  std::optional<StructuredExplanation> explanation;  // set iff errors is empty
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;

  [[nodiscard]] bool ok() const { return errors.empty(); }
};

// Collects every finding instead of stopping at the first. `table_size` is
// the number of facts in the companion table (valid indices 1..table_size).
ParseOutcome try_parse_explanation(std::string_view text, std::size_t table_size, FactRange range);

// Throws ParseError carrying all diagnostics and the raw text.
StructuredExplanation parse_explanation(std::string_view text, const facttable::FactTable& table,
                                        FactRange range);

// Structural checks shared by the parser: count range, sign balance, index
// bounds, duplicates, one-sided skew.
void check_explanation(const StructuredExplanation& e, std::size_t table_size, FactRange range,
                       std::vector<Diagnostic>& errors, std::vector<Diagnostic>& warnings);

// Canonical serializer; parse(render(e)) == e for every valid e.
std::string render_explanation(const StructuredExplanation& e);

struct StatsReport {
  std::size_t instances = 0;
  double mean_total_facts = 0.0;
  double mean_selected = 0.0;
  double mean_favorable = 0.0;
  double mean_adverse = 0.0;
  std::array<double, 3> favorable_by_magnitude{};  // strengths 1..3
  std::array<double, 3> adverse_by_magnitude{};
};

// Throws LengthMismatch when the two lists are not aligned.
StatsReport fact_statistics(std::span<const StructuredExplanation> explanations,
                            std::span<const facttable::FactTable> tables);

std::string format_stats(const StatsReport& report);
Json to_json(const StatsReport& report);

}  // namespace structex::explanation
