// SPDX-License-Identifier: Apache-2.0
#pragma once

// Generators and planted corpora shared by the unit and acceptance tests.

#include <vector>

#include "structex/explanation.hpp"
#include "structex/facttable.hpp"
#include "structex/learn.hpp"
#include "structex/random.hpp"
#include "structex/reflect.hpp"

namespace structex::testing {

facttable::FactTable table_with_facts(int n, const std::string& ticker = "TEST");

// A valid explanation: count in range, distinct indices within the table,
// both signs whenever lo >= 2.
explanation::StructuredExplanation random_explanation(Rng& rng, explanation::FactRange range, int table_size);

struct StatsCorpus {
  std::vector<explanation::StructuredExplanation> explanations;
  std::vector<facttable::FactTable> tables;
};

// 100 instances whose exact means are 39.92 facts per table, 9.11 selected,
// 8.01 favorable (1.00 / 4.53 / 2.48 by magnitude) and 1.10 adverse.
StatsCorpus planted_stats_corpus();

struct PlantedPath {
  std::vector<Decision> path;
  int count = 0;
};

// 1000 traces: B->H 101, B->H->SB 90, B->H->SB->S 47 (all solved), filler
// solved paths with fewer than 47 traces each, and some exhausted traces.
std::vector<reflect::ReflectionTrace> planted_path_traces();

reflect::ReflectionTrace trace_from_path(const std::string& id, const std::vector<Decision>& path, Decision gold);

// Random (preferred, rejected) features over the 24-dim embedding with the
// preferred side chosen by a planted linear utility `w`.
std::vector<learn::PreferencePair> planted_pairs(Rng& rng, const learn::FeatureVector& w, std::size_t n);
learn::FeatureVector random_embedding(Rng& rng);

}  // namespace structex::testing
