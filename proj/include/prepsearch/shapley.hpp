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

// Shapley values: exact subset enumeration for explicit games, Monte-Carlo
// permutation estimates, and the conditional position-specific value of an
// operator given a fixed prefix, averaged over suffixes.

#ifndef PREPSEARCH_SHAPLEY_HPP
#define PREPSEARCH_SHAPLEY_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prepsearch/evaluation.hpp"
#include "prepsearch/operators.hpp"

namespace prepsearch {

/// A cooperative game over players 0..n-1; coalitions are bitmasks.
/// value(0) is always 0 whatever the wrapped function says.
class CharacteristicGame {
 public:
  CharacteristicGame(std::size_t players, std::function<double(std::uint32_t)> v);

  /// `payoffs[mask]` for every mask in [0, 2^n).
  static CharacteristicGame from_table(std::vector<double> payoffs);
  /// {"players": n, "values": {"<mask>": payoff, ...}}; absent masks are 0.
  static CharacteristicGame from_json(const std::string& text);

  std::size_t players() const { return players_; }
  double value(std::uint32_t coalition) const {
    return coalition == 0 ? 0.0 : v_(coalition);
  }

 private:
  std::size_t players_;
  std::function<double(std::uint32_t)> v_;
};

inline constexpr std::size_t kMaxExactPlayers = 20;

/// Mean of sampled marginal contributions with its sample variance.
struct ShapleyEstimate {
  double value = 0.0;
  std::size_t n_samples = 0;
  double sample_variance = 0.0;

  double standard_error() const {
    return n_samples > 0 ? std::sqrt(sample_variance / static_cast<double>(n_samples))
                         : 0.0;
  }
};

/// Mean and unbiased variance (0 for a single sample) of `marginals`.
ShapleyEstimate summarize(std::span<const double> marginals);

/// Weighted subset enumeration. Throws TooManyPlayers above 20 players.
std::vector<double> exact_shapley(const CharacteristicGame& game);

/// Samples `n_perm` uniform arrival orders and averages each player's
/// marginal contribution at its arrival point.
std::vector<ShapleyEstimate> permutation_shapley(const CharacteristicGame& game,
                                                 std::size_t n_perm,
                                                 std::uint64_t seed);

/// Produces suffix slot sequences. sample(i) depends only on the sampler's
/// seed and i, so sample sets for growing n are prefix-extensions.
class SuffixSampler {
 public:
  virtual ~SuffixSampler() = default;
  virtual std::size_t length() const = 0;
  virtual std::vector<OperatorId> sample(std::size_t index) const = 0;
};

/// Uniform over (O u {NULL})^length, with replacement.
class UniformSuffixSampler final : public SuffixSampler {
 public:
  UniformSuffixSampler(std::size_t n_ops, std::size_t length, std::uint64_t seed)
      : n_ops_(n_ops), length_(length), seed_(seed) {}
  std::size_t length() const override { return length_; }
  std::vector<OperatorId> sample(std::size_t index) const override;

 private:
  std::size_t n_ops_;
  std::size_t length_;
  std::uint64_t seed_;
};

/// Slot k draws uniformly from the members of categories[k]; NULL
/// categories give NULL slots.
class ConstrainedSuffixSampler final : public SuffixSampler {
 public:
  ConstrainedSuffixSampler(const OperatorLibrary& lib,
                           std::vector<CategoryId> categories, std::uint64_t seed)
      : lib_(&lib), categories_(std::move(categories)), seed_(seed) {}
  std::size_t length() const override { return categories_.size(); }
  std::vector<OperatorId> sample(std::size_t index) const override;

 private:
  const OperatorLibrary* lib_;
  std::vector<CategoryId> categories_;
  std::uint64_t seed_;
};

/// Every suffix in (O u {NULL})^length, lexicographic with NULL first.
std::vector<std::vector<OperatorId>> enumerate_suffixes(std::size_t n_ops,
                                                        std::size_t length);

/// Fixed prefix (positions 1..j-1) of a length-M pipeline.
struct PositionContext {
  std::vector<OperatorId> prefix;
  std::size_t length = 1;

  /// 1-based position being decided.
  std::size_t position() const { return prefix.size() + 1; }
  std::size_t suffix_length() const { return length - position(); }
};

/// prefix + slot + suffix.
Pipeline compose(std::span<const OperatorId> prefix, OperatorId slot,
                 std::span<const OperatorId> suffix);

/// Mean of v(prefix + candidate + q) - v(prefix + NULL + q) over the given
/// suffixes. Costs exactly 2 evaluation calls per suffix.
ShapleyEstimate conditional_position_shapley(
    const PositionContext& ctx, OperatorId candidate,
    std::span<const std::vector<OperatorId>> suffixes, Evaluator& eval,
    Stage stage = Stage::Other, int workers = 1);

/// Same, with suffixes sample(0) .. sample(n_samples - 1).
ShapleyEstimate conditional_position_shapley(const PositionContext& ctx,
                                             OperatorId candidate,
                                             const SuffixSampler& sampler,
                                             std::size_t n_samples,
                                             Evaluator& eval,
                                             Stage stage = Stage::Other,
                                             int workers = 1);

/// Evaluates the (with, without) pair for every (candidate, suffix) as one
/// batch and reduces per candidate in suffix order, so the estimates do not
/// depend on `workers`. Costs 2 * |candidates| * |suffixes| calls.
std::vector<ShapleyEstimate> estimate_position_values(
    const std::vector<OperatorId>& prefix, std::span<const OperatorId> candidates,
    std::span<const std::vector<OperatorId>> suffixes, Evaluator& eval,
    Stage stage, int workers);

enum class SuffixMode { Sampled, Exhaustive };

struct PositionConstructionConfig {
  std::size_t length = 3;
  /// Suffix samples per candidate (Sampled mode only).
  std::size_t n_samples = 75;
  SuffixMode mode = SuffixMode::Sampled;
  /// Choose NULL when no candidate has a positive value.
  bool allow_null = true;
  std::uint64_t seed = 0;
  int workers = 1;
  std::uint64_t exhaustive_cap = kDefaultExhaustiveCap;
  Stage stage = Stage::Other;
};

struct PositionConstruction {
  Pipeline pipeline;
  /// tables[j][i]: estimate for operator i at position j + 1.
  std::vector<std::vector<ShapleyEstimate>> tables;
};

/// Evaluation calls the exhaustive-suffix construction makes:
/// sum_j 2 * N * (N + 1)^(M - j), saturating.
std::uint64_t exhaustive_construction_calls(std::size_t n_ops, std::size_t length);

/// Position-by-position construction: at each position every operator's
/// conditional value is estimated and the best one (lowest id on ties) is
/// appended. Throws SearchSpaceTooLarge in Exhaustive mode above the cap.
PositionConstruction construct_by_position_shapley(
    std::size_t n_ops, const PositionConstructionConfig& cfg, Evaluator& eval);

/// Index of the largest value, lowest index on ties; -1 when `allow_null`
/// and no value is positive.
int select_best(std::span<const double> values, bool allow_null);

}  // namespace prepsearch

#endif  // PREPSEARCH_SHAPLEY_HPP
