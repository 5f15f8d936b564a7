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

// Post-hoc statistics over operator values: signature correlation and
// category coherence, value-versus-win-rate agreement, and how much an
// operator's value moves with its position.

#ifndef PREPSEARCH_ANALYSIS_HPP
#define PREPSEARCH_ANALYSIS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prepsearch/hierarchical.hpp"
#include "prepsearch/operators.hpp"

namespace prepsearch {

/// Pearson correlation. Throws DataError for mismatched or < 2 samples and
/// ZeroVariance when either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Rows are operators, columns are (dataset, position) contexts.
struct SignatureMatrix {
  std::vector<std::string> operators;
  std::vector<std::string> contexts;
  std::vector<std::vector<double>> values;  // [operator][context]

  /// Throws DataError unless every row has one value per context.
  void check() const;
};

/// One column per (run, position) from Stage-2 tables. Operators a run did
/// not examine at a position get `fill`.
SignatureMatrix signatures_from_runs(
    const OperatorLibrary& lib,
    const std::vector<std::pair<std::string, SearchResult>>& runs, double fill = 0.0);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 for a single pair
  std::size_t pairs = 0;
};

struct CoherenceReport {
  /// Symmetric, unit diagonal; NaN where a pair was excluded.
  std::vector<std::vector<double>> correlation;
  std::optional<MeanSd> within;
  /// Absent when every operator shares one category.
  std::optional<MeanSd> between;
  std::size_t excluded_pairs = 0;
};

/// `category[i]` is the group of signature row i.
CoherenceReport coherence_report(const SignatureMatrix& sig,
                                 std::span<const int> category);

/// Evaluation log plus per-operator values from one dataset.
struct WinRateEvidence {
  std::vector<std::pair<Pipeline, double>> evaluations;
  std::vector<std::pair<OperatorId, double>> values;
};

struct WinRateRow {
  OperatorId op;
  double mean_value = 0.0;
  /// Share of logged pipelines containing `op` that beat their dataset's
  /// median score.
  double win_rate = 0.0;
  std::size_t appearances = 0;
};

struct WinRateCorrelation {
  double r = 0.0;
  std::vector<WinRateRow> rows;
};

/// Operators need at least one value and one logged appearance to enter.
/// Throws InsufficientData below 5 operators, ZeroVariance if a column is
/// constant.
WinRateCorrelation shapley_winrate_correlation(std::span<const WinRateEvidence> data);

/// Evaluation log and Stage-2 values of one search, with the log taken from
/// the evaluator's cache.
WinRateEvidence evidence_from(const SearchResult& result, const EvalCache& cache);

struct PositionProfile {
  OperatorId op;
  std::vector<std::pair<std::size_t, double>> values;  // (1-based position, value)
  double gap = 0.0;  // max - min over positions
  bool sign_change = false;
};

/// Operators examined at two or more positions, ordered by id.
std::vector<PositionProfile> position_profiles(std::span<const OperatorValue> table);

/// Mean |value| of `members` at positions <= length/2 divided by the mean at
/// later positions; nullopt if either side is empty or the later mean is 0.
std::optional<double> early_late_ratio(std::span<const OperatorValue> table,
                                       std::span<const OperatorId> members,
                                       std::size_t length);

std::string correlation_csv(const CoherenceReport& report,
                            const std::vector<std::string>& names);
std::string signature_csv(const SignatureMatrix& sig);
std::string winrate_csv(const WinRateCorrelation& corr, const OperatorLibrary& lib);

}  // namespace prepsearch

#endif  // PREPSEARCH_ANALYSIS_HPP
