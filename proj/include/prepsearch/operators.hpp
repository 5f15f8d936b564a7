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

// The operator library: fit-then-transform preprocessing steps grouped into
// functional categories, the null operator, and pipeline execution.

#ifndef PREPSEARCH_OPERATORS_HPP
#define PREPSEARCH_OPERATORS_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "prepsearch/dataset.hpp"

namespace prepsearch {

/// Index into an OperatorLibrary; the distinguished value -1 is NULL.
struct OperatorId {
  int value = -1;

  static constexpr OperatorId null() { return OperatorId{-1}; }
  constexpr bool is_null() const { return value < 0; }
  auto operator<=>(const OperatorId&) const = default;
};

inline constexpr OperatorId kNullOp = OperatorId::null();

/// Index into a library's category partition; -1 is the NULL category.
struct CategoryId {
  int value = -1;

  static constexpr CategoryId null() { return CategoryId{-1}; }
  constexpr bool is_null() const { return value < 0; }
  auto operator<=>(const CategoryId&) const = default;
};

enum class OperatorKind {
  ImputeMostFrequentCategorical,
  ImputeMean,
  ImputeMedian,
  ImputeMostFrequentNumeric,
  NumericCast,
  LabelEncode,
  OneHot,
  MinMax,
  MaxAbs,
  Robust,
  Standard,
  QuantileUniform,
  PowerLog1p,
  RowNormalize,
  KBins,
  Polynomial,
  InteractionOnly,
  PcaAuto,
  PcaRank2,
  TruncatedSvd,
  RandomProjection,
  RandomThresholdEmbedding,
  VarianceThreshold,
};

struct OperatorSpec {
  OperatorId id;
  std::string name;
  CategoryId category;
  OperatorKind kind = OperatorKind::MinMax;
};

struct Category {
  CategoryId id;
  std::string name;
  std::vector<OperatorId> members;
};

/// Operators plus their partition into categories. Ids are dense 0..N-1,
/// category ids dense 0..K-1, and every operator sits in exactly one
/// category.
class OperatorLibrary {
 public:
  OperatorLibrary() = default;
  OperatorLibrary(std::vector<OperatorSpec> ops,
                  std::vector<std::string> category_names);

  std::size_t size() const { return ops_.size(); }
  std::size_t n_categories() const { return categories_.size(); }
  const std::vector<OperatorSpec>& ops() const { return ops_; }
  const std::vector<Category>& categories() const { return categories_; }
  const OperatorSpec& op(OperatorId id) const;
  const Category& category(CategoryId id) const;
  CategoryId category_of(OperatorId id) const { return op(id).category; }

  /// Throws ConfigError on unknown names.
  OperatorId find(const std::string& name) const;
  CategoryId find_category(const std::string& name) const;

  /// Library restricted to the named operators (in library order). Ids and
  /// category ids are renumbered densely; empty categories are dropped.
  OperatorLibrary subset(const std::vector<std::string>& names) const;

  /// Same operators, different partition. `assignment[i]` is the category
  /// index of operator i into `category_names`.
  OperatorLibrary repartition(const std::vector<int>& assignment,
                              std::vector<std::string> category_names) const;

 private:
  std::vector<OperatorSpec> ops_;
  std::vector<Category> categories_;
};

/// The built-in 23-operator, 5-category library.
OperatorLibrary builtin_library();

/// Fixed-length sequence of slots; NULL slots are no-ops.
struct Pipeline {
  std::vector<OperatorId> slots;

  Pipeline() = default;
  explicit Pipeline(std::vector<OperatorId> s) : slots(std::move(s)) {}
  static Pipeline all_null(std::size_t length) {
    return Pipeline(std::vector<OperatorId>(length, kNullOp));
  }

  std::size_t size() const { return slots.size(); }
  OperatorId operator[](std::size_t i) const { return slots[i]; }
  /// Slot-id sequence, the canonical cache key.
  std::string key() const;
  static Pipeline from_key(const std::string& key);

  auto operator<=>(const Pipeline&) const = default;
};

std::string to_string(const Pipeline& p, const OperatorLibrary& lib);

// Learned parameters, one struct per family of operator kinds.

/// Identity; used whenever an operator is inapplicable to the column mix.
struct IdentityParams {};
/// out = (x - center) / scale per numeric column; scale 0 maps to 0.
struct AffineParams {
  std::vector<double> center;
  std::vector<double> scale;
};
struct NumericFillParams {
  std::vector<double> fill;
};
struct TokenFillParams {
  std::vector<std::string> fill;
};
/// Per-categorical-column vocabularies in first-appearance order.
struct VocabularyParams {
  std::vector<std::vector<std::string>> vocab;
};
struct NumericCastParams {};
/// Sorted train values per numeric column.
struct QuantileParams {
  std::vector<std::vector<double>> reference;
};
struct PowerParams {};
struct RowNormalizeParams {};
/// Interior bin edges per numeric column.
struct BinParams {
  std::vector<std::vector<double>> edges;
};
struct PolynomialParams {
  bool include_squares = true;
};
/// out = basis * (x - mean); basis is rank x d, row-major.
struct ProjectionParams {
  std::vector<double> mean;
  std::vector<double> basis;
  std::size_t rank = 0;
};
struct ThresholdParams {
  std::vector<std::size_t> feature;
  std::vector<double> threshold;
};
/// Indices (among numeric columns) that survive selection.
struct SelectionParams {
  std::vector<std::size_t> keep;
};

using OperatorParams =
    std::variant<IdentityParams, AffineParams, NumericFillParams,
                 TokenFillParams, VocabularyParams, NumericCastParams,
                 QuantileParams, PowerParams, RowNormalizeParams, BinParams,
                 PolynomialParams, ProjectionParams, ThresholdParams,
                 SelectionParams>;

/// Operators whose feature count grows quadratically are skipped (identity)
/// above this many numeric columns.
inline constexpr std::size_t kMaxPolynomialInputs = 12;
inline constexpr std::size_t kBinCount = 5;
inline constexpr std::size_t kEmbeddingStumps = 16;
inline constexpr double kVarianceThreshold = 1e-8;
inline constexpr double kPcaExplainedVariance = 0.95;

struct FittedOperator {
  OperatorSpec spec;
  OperatorParams params;
  /// Schema seen at fit time; transform rejects anything else.
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;

  bool is_identity() const {
    return std::holds_alternative<IdentityParams>(params);
  }
};

/// Learns parameters from `train` only. Never fails: inapplicable operators
/// fit as the identity. `seed` feeds the stochastic operators.
FittedOperator fit(const OperatorSpec& op, const Dataset& train,
                   std::uint64_t seed = 0);

/// Applies fitted parameters. Labels pass through untouched. Throws
/// SchemaMismatch if `ds` differs from the fit-time schema.
Dataset transform(const FittedOperator& f, const Dataset& ds);

/// Seed for a stochastic operator in a run rooted at `root_seed`.
std::uint64_t operator_seed(std::uint64_t root_seed, OperatorId id);

struct TransformedSplit {
  Dataset train;
  Dataset validation;
};

/// Applies slots left to right; each operator is fitted on the current
/// train view and applied to both views. Throws PipelineExecutionFailure if
/// a step yields a non-finite numeric cell.
TransformedSplit run_pipeline(const Pipeline& p, const SplitDataset& split,
                              const OperatorLibrary& lib,
                              std::uint64_t root_seed = 0);

}  // namespace prepsearch

#endif  // PREPSEARCH_OPERATORS_HPP
