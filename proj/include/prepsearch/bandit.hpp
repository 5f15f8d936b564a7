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

// UCB bandits over the operators of one category.

#ifndef PREPSEARCH_BANDIT_HPP
#define PREPSEARCH_BANDIT_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "prepsearch/evaluation.hpp"
#include "prepsearch/operators.hpp"

namespace prepsearch {

inline const double kDefaultExploration = std::sqrt(2.0);

struct ArmStats {
  OperatorId op;
  std::uint64_t pulls = 0;
  double mean = 0.0;

  bool operator==(const ArmStats&) const = default;
};

/// UCB arm statistics for one category. The index of arm o is
///   mean_o + c * sqrt(ln T / n_o),
/// which with the default c = sqrt(2) is the usual sqrt(2 ln T / n_o)
/// bonus. Unpulled arms go first, in operator-id order.
class BanditState {
 public:
  BanditState() = default;
  BanditState(CategoryId category, std::vector<OperatorId> arms,
              double exploration = kDefaultExploration);

  /// Throws EmptyCategory when there are no arms. Does not mutate.
  OperatorId select() const;
  /// Throws UnknownArm; rewards must lie in [0, 1].
  void update(OperatorId arm, double reward);

  /// Arm with the highest mean among pulled arms (lowest id on ties); the
  /// lowest-id arm when nothing has been pulled.
  OperatorId best_mean_arm() const;
  /// Index value of arm `i`; +inf for an unpulled arm.
  double ucb_index(std::size_t i) const;

  CategoryId category() const { return category_; }
  const std::vector<ArmStats>& arms() const { return arms_; }
  const ArmStats& arm(OperatorId op) const;
  std::uint64_t total_pulls() const { return total_; }
  double exploration() const { return exploration_; }

  bool operator==(const BanditState&) const = default;

 private:
  std::size_t index_of(OperatorId op) const;

  CategoryId category_;
  std::vector<ArmStats> arms_;
  std::uint64_t total_ = 0;
  double exploration_ = kDefaultExploration;
};

/// One bandit per category of `lib`, indexed by category id.
std::vector<BanditState> make_bandits(const OperatorLibrary& lib,
                                      double exploration = kDefaultExploration);

/// Evaluates `n_pretrain` uniformly random length-`length` pipelines (NULL
/// allowed) and feeds each pipeline's score to the arm of every non-NULL
/// slot, in sample order.
void pretrain(std::vector<BanditState>& bandits, const OperatorLibrary& lib,
              std::size_t length, std::size_t n_pretrain, Evaluator& eval,
              std::uint64_t seed, int workers = 1);

/// Per-pull record of a simulated bandit run against known arm means.
struct RegretTrace {
  std::vector<std::size_t> arms;
  std::vector<double> rewards;
  /// Sum of gaps (best mean - chosen mean) up to and including each pull.
  std::vector<double> cumulative_regret;

  /// Cumulative regret after `t` pulls (t >= 1).
  double regret_after(std::size_t t) const { return cumulative_regret[t - 1]; }
  /// Fraction of pulls in [from, to) that chose `arm`.
  double share(std::size_t arm, std::size_t from, std::size_t to) const;
};

/// Runs a UCB bandit on Bernoulli arms with the given means for `horizon`
/// pulls.
RegretTrace simulate_bernoulli(std::span<const double> means, std::size_t horizon,
                               std::uint64_t seed,
                               double exploration = kDefaultExploration);

}  // namespace prepsearch

#endif  // PREPSEARCH_BANDIT_HPP
