// Copyright 2026 The prepsearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Comparison strategies that share the evaluator (and so the cache and
// ledger) with the two-stage search.

#ifndef PREPSEARCH_BASELINES_HPP
#define PREPSEARCH_BASELINES_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prepsearch/evaluation.hpp"
#include "prepsearch/hierarchical.hpp"
#include "prepsearch/operators.hpp"
#include "prepsearch/shapley.hpp"

namespace prepsearch {

/// Best of `budget` pipelines drawn uniformly from (O u {NULL})^length;
/// ties go to the earliest draw. Draw i depends only on (seed, i), so a
/// larger budget extends the same draw sequence. Exactly `budget` calls.
ScoredPipeline random_search(std::size_t n_ops, std::size_t length,
                             std::uint64_t budget, Evaluator& eval,
                             std::uint64_t seed, int workers = 1);

/// Left-to-right greedy: each position tries NULL then every operator,
/// scoring prefix + candidate padded with NULL; ties go to the earlier
/// candidate. Exactly length * (n_ops + 1) calls.
ScoredPipeline greedy_sequential(std::size_t n_ops, std::size_t length,
                                 Evaluator& eval, int workers = 1);

std::uint64_t greedy_calls(std::size_t n_ops, std::size_t length);

enum class Ablation {
  /// One position-1 value table; position j gets the j-th ranked operator
  /// with a positive value, else NULL.
  PositionAgnostic,
  /// Stage-1 representatives, no Stage 2.
  CategoryOnly,
  /// Random search with the configured two-stage budget.
  RandomSampling,
  /// Two-stage search with uniform representatives instead of bandits.
  NoBandits,
};

/// "position_agnostic", "category_only", "random_sampling", "no_mab".
/// Throws UnknownVariant.
Ablation parse_ablation(const std::string& name);
const char* to_string(Ablation a);

struct AblationResult {
  Ablation variant = Ablation::CategoryOnly;
  Pipeline pipeline;
  double score = 0.0;
  /// PositionAgnostic: the single value table, indexed by operator id.
  std::vector<ShapleyEstimate> shared_table;
  /// CategoryOnly / NoBandits: the full search record.
  std::optional<SearchResult> search;
};

/// Runs one ablation with the search configuration `cfg`. The reported
/// score is a Stage::Final evaluation of the returned pipeline, except for
/// RandomSampling whose budget is spent entirely on draws.
AblationResult run_ablation(Ablation variant, const OperatorLibrary& lib,
                            const SearchConfig& cfg, Evaluator& eval);

}  // namespace prepsearch

#endif  // PREPSEARCH_BASELINES_HPP
