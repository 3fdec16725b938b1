// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "structex/backend.hpp"
#include "structex/explanation.hpp"

namespace structex::explanation {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_bold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '*' && i + 1 < s.size() && s[i + 1] == '*') {
      ++i;
      continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string_view strip_bullet(std::string_view s) {
  if (s.starts_with("- ") || s.starts_with("* ") || s == "-" || s == "*") return trim(s.substr(1));
  if (s.starts_with("•")) return trim(s.substr(3));
  return s;
}

std::string_view unwrap(std::string_view s, char open, char close) {
  if (s.size() >= 2 && s.front() == open && s.back() == close) return trim(s.substr(1, s.size() - 2));
  return s;
}

// "Decision: Hold" -> "Hold"; nullopt when the line is not that header.
std::optional<std::string_view> header_value(std::string_view line, std::string_view header) {
  if (line.size() < header.size()) return std::nullopt;
  if (lower(line.substr(0, header.size())) != header) return std::nullopt;
  auto rest = trim(line.substr(header.size()));
  if (rest.empty()) return rest;
  if (rest.front() != ':') return std::nullopt;
  return trim(rest.substr(1));
}

const std::regex& fact_line_pattern() {
  static const std::regex pattern(R"(^\[?\s*fact\s*(\d+)\s*\]?\s*\|?\s*(.*)$)", std::regex::icase);
  return pattern;
}

std::optional<Decision> decision_from_text(std::string_view value) {
  value = unwrap(trim(value), '[', ']');
  while (!value.empty() && (value.back() == '.' || value.back() == '!')) value.remove_suffix(1);
  return parse_decision_name(trim(value));
}

enum class Stage { kPreamble, kFacts, kDecision, kJustification };

}  // namespace

std::string format_range(FactRange range) { return fmt::format("{}-{}", range.lo, range.hi); }

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::kMissingSection: return "missing-section";
    case DiagnosticCode::kUnknownLabel: return "unknown-label";
    case DiagnosticCode::kBadStrength: return "bad-strength";
    case DiagnosticCode::kFactIndexOutOfRange: return "fact-index-out-of-range";
    case DiagnosticCode::kCountOutOfRange: return "count-out-of-range";
    case DiagnosticCode::kEmptyContent: return "empty-content";
    case DiagnosticCode::kEmptyJustification: return "empty-justification";
    case DiagnosticCode::kUnbalanced: return "unbalanced";
    case DiagnosticCode::kSignSkew: return "sign-skew";
    case DiagnosticCode::kDuplicateFact: return "duplicate-fact";
    case DiagnosticCode::kUnrecognizedLine: return "unrecognized-line";
  }
  return "?";
}

std::string format_diagnostics(std::span<const Diagnostic> diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += "; ";
    out += d.line > 0 ? fmt::format("line {}: {}: {}", d.line, to_string(d.code), d.message)
                      : fmt::format("{}: {}", to_string(d.code), d.message);
  }
  return out;
}

ParseError::ParseError(std::vector<Diagnostic> diagnostics, std::string raw_text)
    : Error(ErrorCode::kParseError, format_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)),
      raw_text_(std::move(raw_text)) {}

void check_explanation(const StructuredExplanation& e, std::size_t table_size, FactRange range,
                       std::vector<Diagnostic>& errors, std::vector<Diagnostic>& warnings) {
  const int count = static_cast<int>(e.selected.size());
  if (count < range.lo || count > range.hi) {
    errors.push_back({0, DiagnosticCode::kCountOutOfRange,
                      fmt::format("{} facts selected, expected {}", count, format_range(range))});
  }
  int positive = 0;
  int negative = 0;
  std::set<int> seen;
  for (const auto& f : e.selected) {
    (f.strength.sign == Sign::kPositive ? positive : negative) += 1;
    if (f.fact_index < 1 || static_cast<std::size_t>(f.fact_index) > table_size) {
      errors.push_back({0, DiagnosticCode::kFactIndexOutOfRange,
                        fmt::format("fact {} outside table of {} facts", f.fact_index, table_size)});
    }
    if (!seen.insert(f.fact_index).second) {
      warnings.push_back({0, DiagnosticCode::kDuplicateFact,
                          fmt::format("fact {} selected more than once", f.fact_index)});
    }
  }
  if (range.lo >= 2 && count > 0 && (positive == 0 || negative == 0)) {
    errors.push_back({0, DiagnosticCode::kUnbalanced,
                      fmt::format("need at least one favorable and one adverse fact, got {}+/{}-",
                                  positive, negative)});
  }
  if (count > 0 && (positive * 10 > count * 9 || negative * 10 > count * 9)) {
    warnings.push_back({0, DiagnosticCode::kSignSkew,
                        fmt::format("one sign exceeds 90% of selections ({}+/{}-)", positive, negative)});
  }
  if (trim(e.justification).empty()) {
    errors.push_back({0, DiagnosticCode::kEmptyJustification, "justification is empty"});
  }
}

ParseOutcome try_parse_explanation(std::string_view text, std::size_t table_size, FactRange range) {
  if (range.lo > range.hi) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad fact range {}", format_range(range)));
  }
  ParseOutcome out;
  StructuredExplanation e;
  const std::string normalized = backend::normalize_line_endings(text);

  std::vector<std::string> lines;
  for (std::size_t pos = 0; pos <= normalized.size();) {
    const std::size_t end = std::min(normalized.find('\n', pos), normalized.size());
    lines.push_back(normalized.substr(pos, end - pos));
    pos = end + 1;
  }

  Stage stage = Stage::kPreamble;
  bool facts_header = false;
  bool decision_header = false;
  bool justification_header = false;
  std::optional<Decision> decision;
  std::vector<std::string> justification_lines;

  auto take_decision = [&](std::string_view value, int line_no) {
    if (auto d = decision_from_text(value)) {
      decision = d;
    } else {
      out.errors.push_back({line_no, DiagnosticCode::kUnknownLabel,
                            fmt::format("'{}' is not one of the five decisions", value)});
    }
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i + 1);
    const std::string cleaned = strip_bold(lines[i]);
    const std::string_view line = strip_bullet(trim(cleaned));

    if (stage == Stage::kJustification) {
      if (!decision_header) {
        if (auto v = header_value(line, "decision")) {
          decision_header = true;
          if (!v->empty()) take_decision(*v, line_no);
          else stage = Stage::kDecision;
          continue;
        }
      }
      justification_lines.push_back(cleaned);
      continue;
    }
    if (line.empty()) continue;

    if (lower(line).starts_with("selected facts")) {
      facts_header = true;
      stage = Stage::kFacts;
      continue;
    }
    if (auto v = header_value(line, "decision")) {
      decision_header = true;
      if (v->empty()) {
        stage = Stage::kDecision;
      } else {
        take_decision(*v, line_no);
        stage = Stage::kPreamble;
      }
      continue;
    }
    if (auto v = header_value(line, "justification")) {
      justification_header = true;
      stage = Stage::kJustification;
      if (!v->empty()) justification_lines.emplace_back(*v);
      continue;
    }
    if (stage == Stage::kDecision) {
      take_decision(line, line_no);
      stage = Stage::kPreamble;
      continue;
    }

    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_match(line.begin(), line.end(), m, fact_line_pattern())) {
      SelectedFact fact;
      fact.fact_index = std::stoi(m[1].str());
      const std::string_view rest(line.data() + m.position(2), static_cast<std::size_t>(m.length(2)));
      const auto colon = rest.rfind(':');
      if (colon == std::string_view::npos) {
        out.errors.push_back({line_no, DiagnosticCode::kBadStrength, "no ': <strength>' suffix"});
        continue;
      }
      const auto content = unwrap(trim(rest.substr(0, colon)), '[', ']');
      auto symbol = trim(rest.substr(colon + 1));
      symbol = unwrap(unwrap(symbol, '[', ']'), '(', ')');
      const bool all_plus = !symbol.empty() && symbol.find_first_not_of('+') == std::string_view::npos;
      const bool all_minus = !symbol.empty() && symbol.find_first_not_of('-') == std::string_view::npos;
      if ((!all_plus && !all_minus) || symbol.size() > 3) {
        out.errors.push_back({line_no, DiagnosticCode::kBadStrength,
                              fmt::format("strength '{}' must be 1-3 '+' or 1-3 '-'", symbol)});
        continue;
      }
      if (content.empty()) {
        out.errors.push_back({line_no, DiagnosticCode::kEmptyContent, "fact content is empty"});
        continue;
      }
      fact.content = std::string(content);
      fact.strength = Strength{all_plus ? Sign::kPositive : Sign::kNegative, static_cast<int>(symbol.size())};
      e.selected.push_back(std::move(fact));
      continue;
    }
    if (stage == Stage::kFacts) {
      out.warnings.push_back({line_no, DiagnosticCode::kUnrecognizedLine,
                              fmt::format("ignored '{}'", line.substr(0, 60))});
    }
  }

  if (!facts_header) {
    if (e.selected.empty()) {
      out.errors.push_back({0, DiagnosticCode::kMissingSection, "no 'Selected Facts' section"});
    } else {
      out.warnings.push_back({0, DiagnosticCode::kMissingSection, "'Selected Facts' header absent"});
    }
  }
  if (!decision_header) {
    out.errors.push_back({0, DiagnosticCode::kMissingSection, "no 'Decision:' section"});
  } else if (!decision && std::none_of(out.errors.begin(), out.errors.end(), [](const Diagnostic& d) {
               return d.code == DiagnosticCode::kUnknownLabel;
             })) {
    out.errors.push_back({0, DiagnosticCode::kMissingSection, "'Decision:' has no value"});
  }

  std::string justification;
  for (const auto& l : justification_lines) {
    if (!justification.empty()) justification += '\n';
    justification += l;
  }
  e.justification = std::string(trim(justification));
  if (!justification_header) {
    out.errors.push_back({0, DiagnosticCode::kMissingSection, "no 'Justification:' section"});
  }
  if (decision) e.decision = *decision;

  std::vector<Diagnostic> structural_errors;
  check_explanation(e, table_size, range, structural_errors, out.warnings);
  for (auto& d : structural_errors) {
    if (d.code == DiagnosticCode::kEmptyJustification && !justification_header) continue;
    out.errors.push_back(std::move(d));
  }
  if (out.errors.empty()) out.explanation = std::move(e);
  return out;
}

StructuredExplanation parse_explanation(std::string_view text, const facttable::FactTable& table,
                                        FactRange range) {
  ParseOutcome outcome = try_parse_explanation(text, table.facts.size(), range);
  if (!outcome.ok()) throw ParseError(std::move(outcome.errors), std::string(text));
  return std::move(*outcome.explanation);
}

}  // namespace structex::explanation
