// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic corpus and a deterministic stand-in model for offline runs. The
// planner answers every prompt the pipeline issues; recording it yields a
// script the scripted backend replays.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "structex/backend.hpp"
#include "structex/corpus.hpp"
#include "structex/explanation.hpp"

namespace structex::demo {

struct DemoOptions {
  std::size_t instances = 24;
  std::uint64_t seed = 7;
  int horizon_days = 30;
  int max_reflections = 4;
  // Chance that a reflection first repeats an earlier decision.
  double repeat_probability = 0.15;
  explanation::FactRange range{6, 10};
};

struct DemoCorpus {
  std::vector<corpus::Transcript> transcripts;
  std::vector<corpus::PriceRecord> prices;
  std::map<std::string, Decision> gold_by_ticker;
};

DemoCorpus make_corpus(const DemoOptions& options);

// Answers fact-table, decision and reflection prompts. Decision paths are a
// pure function of (seed, ticker, fact range); they end at the gold label
// within max_reflections rounds, start at Hold more often than not and solve
// fastest for 6-10 facts.
class PlannerBackend final : public backend::LlmBackend {
 public:
  PlannerBackend(std::map<std::string, Decision> gold_by_ticker, const DemoOptions& options);

  [[nodiscard]] std::vector<Decision> planned_path(const std::string& ticker,
                                                   explanation::FactRange range) const;

 protected:
  std::string do_complete(const backend::PromptTemplate& tpl, const backend::Slots& slots) override;

 private:
  std::string facts_reply(const backend::Slots& slots) const;
  std::string explanation_reply(const std::string& fact_table, explanation::FactRange range, Decision decision,
                                int round, bool repeat) const;

  std::map<std::string, Decision> gold_;
  DemoOptions options_;
};

struct DemoFiles {
  std::filesystem::path transcripts;
  std::filesystem::path prices;
  std::filesystem::path script;
  std::filesystem::path config;
};

// Writes transcripts.jsonl, prices.csv, script.jsonl and demo.conf into `dir`.
// The script covers distillation, decisions, reflection at the configured
// range and the default sweep ranges.
DemoFiles write_demo(const std::filesystem::path& dir, const DemoOptions& options);

}  // namespace structex::demo
