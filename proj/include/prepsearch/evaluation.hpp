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

// The performance function v(P): an oracle that scores a pipeline, a
// memoizing cache in front of it, and a ledger that counts every request.

#ifndef PREPSEARCH_EVALUATION_HPP
#define PREPSEARCH_EVALUATION_HPP

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prepsearch/dataset.hpp"
#include "prepsearch/learner.hpp"
#include "prepsearch/operators.hpp"

namespace prepsearch {

struct EvalOutcome {
  double score = 0.0;
  bool failed = false;
};

struct EvalResult {
  double score = 0.0;
  bool failed = false;
  bool from_cache = false;
};

/// Scores a pipeline. Implementations must be pure and thread-safe.
class PipelineOracle {
 public:
  virtual ~PipelineOracle() = default;
  virtual EvalOutcome score(const Pipeline& p) const = 0;
};

/// Runs the pipeline on a split, trains softmax regression on the
/// transformed train view and returns validation accuracy. Categorical
/// columns left after the pipeline are not seen by the learner; leftover
/// missing cells, a failed step or no numeric feature at all score as a
/// failure (0.0).
class DatasetOracle final : public PipelineOracle {
 public:
  DatasetOracle(SplitDataset split, OperatorLibrary lib, LearnerConfig cfg = {},
                std::uint64_t operator_seed = 0);

  EvalOutcome score(const Pipeline& p) const override;

  const SplitDataset& split() const { return split_; }
  const OperatorLibrary& library() const { return lib_; }

 private:
  SplitDataset split_;
  OperatorLibrary lib_;
  LearnerConfig cfg_;
  std::uint64_t operator_seed_;
};

/// Wraps an arbitrary scoring function (synthetic games, test oracles).
class FunctionOracle final : public PipelineOracle {
 public:
  explicit FunctionOracle(std::function<double(const Pipeline&)> f)
      : f_(std::move(f)) {}
  EvalOutcome score(const Pipeline& p) const override { return {f_(p), false}; }

 private:
  std::function<double(const Pipeline&)> f_;
};

/// Numeric feature matrix for the learner, or false if the dataset still
/// has missing numeric cells or no numeric column.
bool learner_features(const Dataset& ds, Matrix& out);

enum class Stage : std::size_t {
  Pretrain,
  Stage1,
  Stage2,
  Final,
  Baseline,
  Other,
};
inline constexpr std::size_t kStageCount = 6;
const char* to_string(Stage s);

struct LedgerSnapshot {
  std::uint64_t algorithmic_calls = 0;
  std::uint64_t unique_evaluations = 0;
  std::array<std::uint64_t, kStageCount> stage_calls{};
  std::array<std::uint64_t, kStageCount> stage_unique{};

  std::uint64_t calls(Stage s) const { return stage_calls[static_cast<std::size_t>(s)]; }
  std::uint64_t unique(Stage s) const { return stage_unique[static_cast<std::size_t>(s)]; }
  std::uint64_t cache_hits() const { return algorithmic_calls - unique_evaluations; }
  bool operator==(const LedgerSnapshot&) const = default;
};

/// Exact counter of evaluation requests. All updates are atomic.
class BudgetLedger {
 public:
  void record(Stage s, bool miss);
  LedgerSnapshot snapshot() const;

 private:
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> unique_{0};
  std::array<std::atomic<std::uint64_t>, kStageCount> stage_calls_{};
  std::array<std::atomic<std::uint64_t>, kStageCount> stage_unique_{};
};

/// Memo table keyed by the raw slot sequence. Concurrent requests for the
/// same missing key compute it once; the others wait and count as hits.
class EvalCache {
 public:
  struct Lookup {
    EvalOutcome outcome;
    bool hit = false;
  };

  /// Returns the cached outcome or computes it with `compute`.
  Lookup get_or_compute(const std::string& key,
                        const std::function<EvalOutcome()>& compute);

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  double hit_rate() const;
  std::size_t size() const;

  /// Every completed entry, sorted by key.
  std::vector<std::pair<Pipeline, EvalOutcome>> entries() const;

  /// Line-delimited JSON: {"key":[ids],"score":s,"failed":b}. Loaded entries
  /// do not touch the hit/miss counters.
  void save(const std::string& path) const;
  std::size_t load(const std::string& path);

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_future<EvalOutcome>> table_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

/// Oracle + cache + ledger. Safe to call from many threads.
class Evaluator {
 public:
  explicit Evaluator(const PipelineOracle& oracle) : oracle_(&oracle) {}

  EvalResult evaluate(const Pipeline& p, Stage stage = Stage::Other);

  /// Evaluates a batch with up to `workers` OpenMP threads. Results are in
  /// input order and identical for every worker count.
  std::vector<EvalResult> evaluate_batch(std::span<const Pipeline> batch,
                                         Stage stage, int workers);
  /// Plain loop; kept as the reference for evaluate_batch.
  std::vector<EvalResult> evaluate_batch_serial(std::span<const Pipeline> batch,
                                                Stage stage);

  EvalCache& cache() { return cache_; }
  const EvalCache& cache() const { return cache_; }
  LedgerSnapshot ledger() const { return ledger_.snapshot(); }

 private:
  const PipelineOracle* oracle_;
  EvalCache cache_;
  BudgetLedger ledger_;
};

/// Number of pipelines in (N + 1)^M, saturating at UINT64_MAX.
std::uint64_t search_space_size(std::size_t n_ops, std::size_t length);

/// All pipelines in lexicographic slot order (NULL sorts first).
std::vector<Pipeline> enumerate_pipelines(std::size_t n_ops, std::size_t length);

struct ScoredPipeline {
  Pipeline pipeline;
  double score = 0.0;
};

inline constexpr std::uint64_t kDefaultExhaustiveCap = 20000;

/// Evaluates all (N + 1)^M pipelines; ties go to the lexicographically
/// smallest slot sequence. Throws SearchSpaceTooLarge above `cap`.
ScoredPipeline exhaustive_best(std::size_t n_ops, std::size_t length,
                               Evaluator& eval,
                               std::uint64_t cap = kDefaultExhaustiveCap,
                               int workers = 1);

}  // namespace prepsearch

#endif  // PREPSEARCH_EVALUATION_HPP
