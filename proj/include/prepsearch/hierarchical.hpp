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

// Two-stage search. Stage 1 values whole categories position by position,
// with UCB bandits picking each category's representative operator; Stage 2
// picks the concrete operator inside each chosen category, sampling only
// suffixes that follow the Stage-1 category order.

#ifndef PREPSEARCH_HIERARCHICAL_HPP
#define PREPSEARCH_HIERARCHICAL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "prepsearch/bandit.hpp"
#include "prepsearch/dataset.hpp"
#include "prepsearch/evaluation.hpp"
#include "prepsearch/learner.hpp"
#include "prepsearch/operators.hpp"
#include "prepsearch/shapley.hpp"

namespace prepsearch {

using CategorySequence = std::vector<CategoryId>;

struct SearchConfig {
  std::size_t length = 6;
  /// Suffix samples per category value in Stage 1.
  std::size_t n_perm = 75;
  /// Suffix samples per operator value in Stage 2.
  std::size_t n_perm_refine = 75;
  std::size_t n_pretrain = 2000;
  std::uint64_t seed = 42;
  int workers = 1;
  bool allow_null_category = true;
  /// Stage-1 samples evaluated between bandit updates. Within a batch,
  /// representatives are chosen against a snapshot that counts pending
  /// pulls; 1 reproduces strictly sequential updating.
  std::size_t bandit_batch = 8;
  /// false: representatives drawn uniformly inside the category, no UCB.
  bool use_bandits = true;
  /// true: decided Stage-1 positions are re-selected by UCB per sample
  /// instead of frozen to the category's best-mean arm.
  bool reselect_prefix = false;
  double exploration = kDefaultExploration;
};

/// Calls Stage 1 makes: 2 * M * K * n_perm.
std::uint64_t stage1_calls(std::size_t length, std::size_t n_categories,
                           std::size_t n_perm);
/// Calls Stage 2 makes: 2 * n_perm' * sum of chosen category sizes.
std::uint64_t stage2_calls(const OperatorLibrary& lib, const CategorySequence& seq,
                           std::size_t n_perm_refine);
/// Configured two-stage budget with the average category size |C| = N / K:
/// M*K*n_perm*2 + M*|C|*n_perm'*2.
double two_stage_budget(std::size_t length, std::size_t n_ops,
                        std::size_t n_categories, std::size_t n_perm,
                        std::size_t n_perm_refine);

/// Category-level value estimate for `candidate` at position
/// prefix_ops.size() + 1. Samples n_perm category suffixes uniformly (with
/// replacement) from categories + NULL, lets the bandits pick operators,
/// and feeds v(with) back to every bandit involved. Costs 2 * n_perm calls.
ShapleyEstimate category_shapley(const OperatorLibrary& lib,
                                 std::span<const OperatorId> prefix_ops,
                                 std::span<const CategoryId> prefix_categories,
                                 CategoryId candidate, const SearchConfig& cfg,
                                 std::vector<BanditState>& bandits,
                                 Evaluator& eval);

struct Stage1Result {
  CategorySequence sequence;
  /// table[j][k]: value of category k at position j + 1.
  std::vector<std::vector<ShapleyEstimate>> table;
  /// Operator frozen at each decided position (NULL for NULL categories).
  std::vector<OperatorId> representatives;
};

Stage1Result stage1_search(const OperatorLibrary& lib, const SearchConfig& cfg,
                           std::vector<BanditState>& bandits, Evaluator& eval);

struct OperatorValue {
  std::size_t position = 0;  // 1-based
  OperatorId op;
  ShapleyEstimate estimate;
};

struct Stage2Result {
  Pipeline pipeline;
  std::vector<OperatorValue> table;
};

/// Picks the best member of each non-NULL category in `seq`, valuing each
/// candidate over n_perm' suffixes drawn slot-wise from the later
/// categories of `seq`.
Stage2Result stage2_refine(const OperatorLibrary& lib, const CategorySequence& seq,
                           const SearchConfig& cfg, Evaluator& eval);

struct SearchResult {
  Pipeline pipeline;
  CategorySequence category_sequence;
  double score = 0.0;
  std::vector<std::vector<ShapleyEstimate>> category_table;
  std::vector<OperatorValue> operator_table;
  std::vector<OperatorId> stage1_representatives;
  LedgerSnapshot ledger;
  std::vector<BanditState> bandits;
  double cache_hit_rate = 0.0;
};

/// Pretrain, Stage 1, Stage 2, then one final evaluation of the result.
SearchResult run_search(const OperatorLibrary& lib, const SearchConfig& cfg,
                        Evaluator& eval);

struct DataSettings {
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  LearnerConfig learner;
};

/// Splits `ds`, scores pipelines with softmax regression and runs the
/// two-stage search.
SearchResult search(const Dataset& ds, const OperatorLibrary& lib,
                    const SearchConfig& cfg, const DataSettings& data = {});

}  // namespace prepsearch

#endif  // PREPSEARCH_HIERARCHICAL_HPP
