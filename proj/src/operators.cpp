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

#include "prepsearch/operators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "prepsearch/common.hpp"

namespace prepsearch {

// ---------------------------------------------------------------------------
// Library

OperatorLibrary::OperatorLibrary(std::vector<OperatorSpec> ops,
                                 std::vector<std::string> category_names)
    : ops_(std::move(ops)) {
  if (category_names.empty()) {
    throw Error("ConfigError", "a library needs at least one category");
  }
  for (std::size_t k = 0; k < category_names.size(); ++k) {
    categories_.push_back(
        Category{CategoryId{static_cast<int>(k)}, category_names[k], {}});
  }
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    OperatorSpec& op = ops_[i];
    op.id = OperatorId{static_cast<int>(i)};
    const int c = op.category.value;
    if (c < 0 || static_cast<std::size_t>(c) >= categories_.size()) {
      throw Error("ConfigError", "operator '" + op.name + "' has no category");
    }
    categories_[static_cast<std::size_t>(c)].members.push_back(op.id);
  }
  if (ops_.size() > 250) {
    throw Error("ConfigError", "libraries are limited to 250 operators");
  }
}

const OperatorSpec& OperatorLibrary::op(OperatorId id) const {
  if (id.is_null() || static_cast<std::size_t>(id.value) >= ops_.size()) {
    throw Error("UnknownOperator", "operator id " + std::to_string(id.value));
  }
  return ops_[static_cast<std::size_t>(id.value)];
}

const Category& OperatorLibrary::category(CategoryId id) const {
  if (id.is_null() || static_cast<std::size_t>(id.value) >= categories_.size()) {
    throw Error("UnknownCategory", "category id " + std::to_string(id.value));
  }
  return categories_[static_cast<std::size_t>(id.value)];
}

OperatorId OperatorLibrary::find(const std::string& name) const {
  for (const OperatorSpec& op : ops_) {
    if (op.name == name) return op.id;
  }
  throw Error("ConfigError", "unknown operator '" + name + "'");
}

CategoryId OperatorLibrary::find_category(const std::string& name) const {
  for (const Category& c : categories_) {
    if (c.name == name) return c.id;
  }
  throw Error("ConfigError", "unknown category '" + name + "'");
}

OperatorLibrary OperatorLibrary::subset(
    const std::vector<std::string>& names) const {
  std::vector<bool> wanted(ops_.size(), false);
  for (const std::string& n : names) {
    wanted[static_cast<std::size_t>(find(n).value)] = true;
  }
  std::vector<int> remap(categories_.size(), -1);
  std::vector<std::string> cat_names;
  std::vector<OperatorSpec> out;
  for (const OperatorSpec& op : ops_) {
    if (!wanted[static_cast<std::size_t>(op.id.value)]) continue;
    int& c = remap[static_cast<std::size_t>(op.category.value)];
    if (c < 0) {
      c = static_cast<int>(cat_names.size());
      cat_names.push_back(category(op.category).name);
    }
    OperatorSpec copy = op;
    copy.category = CategoryId{c};
    out.push_back(std::move(copy));
  }
  if (out.empty()) throw Error("ConfigError", "empty operator subset");
  return OperatorLibrary(std::move(out), std::move(cat_names));
}

OperatorLibrary OperatorLibrary::repartition(
    const std::vector<int>& assignment,
    std::vector<std::string> category_names) const {
  if (assignment.size() != ops_.size()) {
    throw Error("ConfigError", "assignment size differs from library size");
  }
  std::vector<OperatorSpec> out = ops_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].category = CategoryId{assignment[i]};
  }
  return OperatorLibrary(std::move(out), std::move(category_names));
}

OperatorLibrary builtin_library() {
  using K = OperatorKind;
  enum { kImpute, kEncode, kScale, kEngineer, kSelect };
  const std::vector<std::pair<const char*, std::pair<K, int>>> table = {
      {"impute_most_frequent_cat", {K::ImputeMostFrequentCategorical, kImpute}},
      {"impute_mean", {K::ImputeMean, kImpute}},
      {"impute_median", {K::ImputeMedian, kImpute}},
      {"impute_most_frequent_num", {K::ImputeMostFrequentNumeric, kImpute}},
      {"numeric_cast", {K::NumericCast, kEncode}},
      {"label_encode", {K::LabelEncode, kEncode}},
      {"one_hot", {K::OneHot, kEncode}},
      {"minmax", {K::MinMax, kScale}},
      {"maxabs", {K::MaxAbs, kScale}},
      {"robust", {K::Robust, kScale}},
      {"standard", {K::Standard, kScale}},
      {"quantile_uniform", {K::QuantileUniform, kScale}},
      {"power_log1p", {K::PowerLog1p, kScale}},
      {"normalizer", {K::RowNormalize, kScale}},
      {"kbins", {K::KBins, kScale}},
      {"polynomial", {K::Polynomial, kEngineer}},
      {"interaction", {K::InteractionOnly, kEngineer}},
      {"pca_auto", {K::PcaAuto, kEngineer}},
      {"pca_rank2", {K::PcaRank2, kEngineer}},
      {"truncated_svd", {K::TruncatedSvd, kEngineer}},
      {"random_projection", {K::RandomProjection, kEngineer}},
      {"threshold_embedding", {K::RandomThresholdEmbedding, kEngineer}},
      {"variance_threshold", {K::VarianceThreshold, kSelect}},
  };
  std::vector<OperatorSpec> ops;
  for (const auto& [name, kc] : table) {
    ops.push_back(OperatorSpec{OperatorId{}, name, CategoryId{kc.second}, kc.first});
  }
  return OperatorLibrary(std::move(ops), {"imputation", "encoding", "scaling",
                                          "engineering", "selection"});
}

// ---------------------------------------------------------------------------
// Pipeline

std::string Pipeline::key() const {
  std::string k;
  k.reserve(slots.size());
  for (OperatorId id : slots) k.push_back(static_cast<char>(id.value + 1));
  return k;
}

Pipeline Pipeline::from_key(const std::string& key) {
  Pipeline p;
  for (char c : key) {
    p.slots.push_back(OperatorId{static_cast<unsigned char>(c) - 1});
  }
  return p;
}

std::string to_string(const Pipeline& p, const OperatorLibrary& lib) {
  std::string out = "[";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ", ";
    out += p[i].is_null() ? std::string("NULL") : lib.op(p[i]).name;
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Fitting helpers

namespace {

std::vector<std::size_t> columns_of_kind(const Dataset& ds, ColumnKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < ds.n_cols(); ++c) {
    if (ds.column(c).kind == kind) out.push_back(c);
  }
  return out;
}

std::vector<double> present_values(const Column& col) {
  std::vector<double> v;
  v.reserve(col.numeric.size());
  for (const auto& x : col.numeric) {
    if (x) v.push_back(*x);
  }
  return v;
}

// Linear-interpolated quantile of sorted data (numpy's default rule).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double most_frequent(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double best = values[0];
  std::size_t best_run = 0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    if (j - i > best_run) {
      best_run = j - i;
      best = values[i];
    }
    i = j;
  }
  return best;
}

AffineParams fit_affine(const Dataset& ds, OperatorKind kind) {
  AffineParams p;
  for (std::size_t c : columns_of_kind(ds, ColumnKind::Numeric)) {
    std::vector<double> v = present_values(ds.column(c));
    double center = 0.0;
    double scale = 1.0;
    if (!v.empty()) {
      switch (kind) {
        case OperatorKind::MinMax: {
          auto [mn, mx] = std::minmax_element(v.begin(), v.end());
          center = *mn;
          scale = *mx - *mn;
          break;
        }
        case OperatorKind::MaxAbs: {
          double m = 0.0;
          for (double x : v) m = std::max(m, std::abs(x));
          scale = m;
          break;
        }
        case OperatorKind::Robust: {
          std::sort(v.begin(), v.end());
          center = quantile_sorted(v, 0.5);
          scale = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
          break;
        }
        default: {  // Standard
          const double n = static_cast<double>(v.size());
          center = std::accumulate(v.begin(), v.end(), 0.0) / n;
          double ss = 0.0;
          for (double x : v) ss += (x - center) * (x - center);
          scale = std::sqrt(ss / n);
          break;
        }
      }
    }
    p.center.push_back(center);
    p.scale.push_back(scale);
  }
  return p;
}

// Row-major numeric block of the numeric columns; rows with any missing cell
// are flagged in `complete`.
struct NumericBlock {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<bool> complete;
};

NumericBlock numeric_block(const Dataset& ds) {
  const auto idx = columns_of_kind(ds, ColumnKind::Numeric);
  NumericBlock b;
  b.rows = ds.n_rows();
  b.cols = idx.size();
  b.values.assign(b.rows * b.cols, 0.0);
  b.complete.assign(b.rows, true);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const Column& col = ds.column(idx[j]);
    for (std::size_t r = 0; r < b.rows; ++r) {
      if (col.numeric[r]) {
        b.values[r * b.cols + j] = *col.numeric[r];
      } else {
        b.complete[r] = false;
      }
    }
  }
  return b;
}

// Top eigenvectors of a symmetric d x d matrix by power iteration with
// deflation. Stops after `max_rank` vectors, or once the captured share of
// the trace reaches `target_share` (when positive).
std::vector<double> top_eigenvectors(std::vector<double> m, std::size_t d,
                                     std::size_t max_rank, double target_share,
                                     Rng& rng) {
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += m[i * d + i];
  std::vector<double> basis;
  double captured = 0.0;
  std::vector<double> v(d), w(d);
  for (std::size_t k = 0; k < max_rank; ++k) {
    for (double& x : v) x = standard_normal(rng);
    double lambda = 0.0;
    for (int it = 0; it < 300; ++it) {
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += m[i * d + j] * v[j];
        w[i] = s;
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm <= 1e-300) break;
      for (std::size_t i = 0; i < d; ++i) w[i] /= norm;
      double delta = 0.0;
      for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(w[i] - v[i]));
      v.swap(w);
      const double prev = lambda;
      lambda = norm;
      if (delta < 1e-10 || std::abs(lambda - prev) <= 1e-13 * std::max(1.0, lambda)) {
        break;
      }
    }
    if (lambda <= 1e-12 * std::max(1.0, trace)) break;
    // Fix the sign so the largest-magnitude entry is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i) {
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0) {
      for (double& x : v) x = -x;
    }
    basis.insert(basis.end(), v.begin(), v.end());
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m[i * d + j] -= lambda * v[i] * v[j];
    }
    captured += lambda;
    if (target_share > 0.0 && captured >= target_share * trace) break;
  }
  return basis;
}

FittedOperator identity_of(const OperatorSpec& op) {
  return FittedOperator{op, IdentityParams{}, {}, {}};
}

OperatorParams fit_params(const OperatorSpec& op, const Dataset& train,
                          std::uint64_t seed) {
  using K = OperatorKind;
  const auto numeric = columns_of_kind(train, ColumnKind::Numeric);
  const auto categorical = columns_of_kind(train, ColumnKind::Categorical);

  switch (op.kind) {
    case K::ImputeMean:
    case K::ImputeMedian:
    case K::ImputeMostFrequentNumeric: {
      if (numeric.empty()) return IdentityParams{};
      NumericFillParams p;
      for (std::size_t c : numeric) {
        std::vector<double> v = present_values(train.column(c));
        double fill = 0.0;
        if (!v.empty()) {
          if (op.kind == K::ImputeMean) {
            fill = std::accumulate(v.begin(), v.end(), 0.0) /
                   static_cast<double>(v.size());
          } else if (op.kind == K::ImputeMedian) {
            std::sort(v.begin(), v.end());
            fill = quantile_sorted(v, 0.5);
          } else {
            fill = most_frequent(std::move(v));
          }
        }
        p.fill.push_back(fill);
      }
      return p;
    }
    case K::ImputeMostFrequentCategorical: {
      if (categorical.empty()) return IdentityParams{};
      TokenFillParams p;
      for (std::size_t c : categorical) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : train.column(c).tokens) {
          if (t) ++counts[*t];
        }
        std::string best = "missing";
        std::size_t best_n = 0;
        for (const auto& [tok, n] : counts) {
          if (n > best_n) {
            best = tok;
            best_n = n;
          }
        }
        p.fill.push_back(best);
      }
      return p;
    }
    case K::NumericCast:
      if (categorical.empty()) return IdentityParams{};
      return NumericCastParams{};
    case K::LabelEncode:
    case K::OneHot: {
      if (categorical.empty()) return IdentityParams{};
      VocabularyParams p;
      for (std::size_t c : categorical) {
        std::vector<std::string> vocab;
        std::unordered_map<std::string, std::size_t> seen;
        for (const auto& t : train.column(c).tokens) {
          if (t && seen.emplace(*t, vocab.size()).second) vocab.push_back(*t);
        }
        p.vocab.push_back(std::move(vocab));
      }
      return p;
    }
    case K::MinMax:
    case K::MaxAbs:
    case K::Robust:
    case K::Standard:
      if (numeric.empty()) return IdentityParams{};
      return fit_affine(train, op.kind);
    case K::QuantileUniform: {
      if (numeric.empty()) return IdentityParams{};
      QuantileParams p;
      for (std::size_t c : numeric) {
        std::vector<double> v = present_values(train.column(c));
        std::sort(v.begin(), v.end());
        p.reference.push_back(std::move(v));
      }
      return p;
    }
    case K::PowerLog1p:
      if (numeric.empty()) return IdentityParams{};
      return PowerParams{};
    case K::RowNormalize:
      if (numeric.empty()) return IdentityParams{};
      return RowNormalizeParams{};
    case K::KBins: {
      if (numeric.empty()) return IdentityParams{};
      BinParams p;
      for (std::size_t c : numeric) {
        std::vector<double> v = present_values(train.column(c));
        std::sort(v.begin(), v.end());
        std::vector<double> edges;
        if (!v.empty()) {
          for (std::size_t b = 1; b < kBinCount; ++b) {
            edges.push_back(quantile_sorted(
                v, static_cast<double>(b) / static_cast<double>(kBinCount)));
          }
        }
        p.edges.push_back(std::move(edges));
      }
      return p;
    }
    case K::Polynomial:
    case K::InteractionOnly:
      if (numeric.empty() || numeric.size() > kMaxPolynomialInputs) {
        return IdentityParams{};
      }
      if (op.kind == K::InteractionOnly && numeric.size() < 2) {
        return IdentityParams{};
      }
      return PolynomialParams{op.kind == K::Polynomial};
    case K::PcaAuto:
    case K::PcaRank2:
    case K::TruncatedSvd: {
      if (numeric.size() < 2) return IdentityParams{};
      const NumericBlock b = numeric_block(train);
      const std::size_t d = b.cols;
      std::vector<double> mean(d, 0.0);
      std::size_t n = 0;
      for (std::size_t r = 0; r < b.rows; ++r) {
        if (!b.complete[r]) continue;
        ++n;
        for (std::size_t j = 0; j < d; ++j) mean[j] += b.values[r * d + j];
      }
      if (n < 2) return IdentityParams{};
      if (op.kind == K::TruncatedSvd) {
        std::fill(mean.begin(), mean.end(), 0.0);
      } else {
        for (double& m : mean) m /= static_cast<double>(n);
      }
      std::vector<double> gram(d * d, 0.0);
      for (std::size_t r = 0; r < b.rows; ++r) {
        if (!b.complete[r]) continue;
        for (std::size_t i = 0; i < d; ++i) {
          const double xi = b.values[r * d + i] - mean[i];
          for (std::size_t j = 0; j < d; ++j) {
            gram[i * d + j] += xi * (b.values[r * d + j] - mean[j]);
          }
        }
      }
      for (double& g : gram) g /= static_cast<double>(n - 1);
      Rng rng(seed);
      const bool auto_rank = op.kind == K::PcaAuto;
      const std::size_t max_rank = auto_rank ? d : std::min<std::size_t>(2, d);
      ProjectionParams p;
      p.mean = std::move(mean);
      p.basis = top_eigenvectors(std::move(gram), d, max_rank,
                                 auto_rank ? kPcaExplainedVariance : 0.0, rng);
      p.rank = p.basis.size() / d;
      if (p.rank == 0) return IdentityParams{};
      return p;
    }
    case K::RandomProjection: {
      if (numeric.size() < 2) return IdentityParams{};
      const std::size_t d = numeric.size();
      const std::size_t k = std::max<std::size_t>(2, (d + 1) / 2);
      Rng rng(seed);
      ProjectionParams p;
      p.mean.assign(d, 0.0);
      p.rank = k;
      p.basis.resize(k * d);
      const double s = 1.0 / std::sqrt(static_cast<double>(k));
      for (double& x : p.basis) x = s * standard_normal(rng);
      return p;
    }
    case K::RandomThresholdEmbedding: {
      if (numeric.empty()) return IdentityParams{};
      Rng rng(seed);
      ThresholdParams p;
      for (std::size_t t = 0; t < kEmbeddingStumps; ++t) {
        const std::size_t j = uniform_index(rng, numeric.size());
        const std::vector<double> v = present_values(train.column(numeric[j]));
        if (v.empty()) continue;
        p.feature.push_back(j);
        p.threshold.push_back(v[uniform_index(rng, v.size())]);
      }
      if (p.feature.empty()) return IdentityParams{};
      return p;
    }
    case K::VarianceThreshold: {
      if (numeric.empty()) return IdentityParams{};
      SelectionParams p;
      for (std::size_t j = 0; j < numeric.size(); ++j) {
        const std::vector<double> v = present_values(train.column(numeric[j]));
        if (v.empty()) continue;
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        if (ss / n > kVarianceThreshold) p.keep.push_back(j);
      }
      if (p.keep.empty() || p.keep.size() == numeric.size()) {
        return IdentityParams{};
      }
      return p;
    }
  }
  return IdentityParams{};
}

// ---------------------------------------------------------------------------
// Transform helpers

std::optional<double> parse_token(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// Replaces each numeric column in place with f(column index among numeric,
// value); missing cells stay missing.
template <typename F>
Dataset map_numeric(const Dataset& ds, F f) {
  std::vector<Column> cols = ds.columns();
  std::size_t j = 0;
  for (Column& c : cols) {
    if (c.kind != ColumnKind::Numeric) continue;
    for (auto& x : c.numeric) {
      if (x) x = f(j, *x);
    }
    ++j;
  }
  return ds.with_columns(std::move(cols));
}

// New numeric columns first, then the untouched categorical columns.
Dataset replace_numeric(const Dataset& ds, std::vector<Column> numeric) {
  for (const Column& c : ds.columns()) {
    if (c.kind == ColumnKind::Categorical) numeric.push_back(c);
  }
  return ds.with_columns(std::move(numeric));
}

Dataset apply_params(const FittedOperator& f, const Dataset& ds) {
  const OperatorParams& params = f.params;
  const std::size_t n = ds.n_rows();

  if (std::holds_alternative<IdentityParams>(params)) return ds;

  if (const auto* p = std::get_if<AffineParams>(&params)) {
    return map_numeric(ds, [p](std::size_t j, double x) {
      const double s = p->scale[j];
      return s == 0.0 ? 0.0 : (x - p->center[j]) / s;
    });
  }
  if (const auto* p = std::get_if<NumericFillParams>(&params)) {
    std::vector<Column> cols = ds.columns();
    std::size_t j = 0;
    for (Column& c : cols) {
      if (c.kind != ColumnKind::Numeric) continue;
      for (auto& x : c.numeric) {
        if (!x) x = p->fill[j];
      }
      ++j;
    }
    return ds.with_columns(std::move(cols));
  }
  if (const auto* p = std::get_if<TokenFillParams>(&params)) {
    std::vector<Column> cols = ds.columns();
    std::size_t j = 0;
    for (Column& c : cols) {
      if (c.kind != ColumnKind::Categorical) continue;
      for (auto& t : c.tokens) {
        if (!t) t = p->fill[j];
      }
      ++j;
    }
    return ds.with_columns(std::move(cols));
  }
  if (std::holds_alternative<NumericCastParams>(params)) {
    std::vector<Column> cols;
    for (const Column& c : ds.columns()) {
      if (c.kind == ColumnKind::Numeric) {
        cols.push_back(c);
        continue;
      }
      std::vector<std::optional<double>> v(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (c.tokens[r]) v[r] = parse_token(*c.tokens[r]);
      }
      cols.push_back(Column::make_numeric(c.name, std::move(v)));
    }
    return ds.with_columns(std::move(cols));
  }
  if (const auto* p = std::get_if<VocabularyParams>(&params)) {
    const bool one_hot = f.spec.kind == OperatorKind::OneHot;
    std::vector<Column> cols;
    std::size_t j = 0;
    for (const Column& c : ds.columns()) {
      if (c.kind == ColumnKind::Numeric) {
        cols.push_back(c);
        continue;
      }
      const auto& vocab = p->vocab[j++];
      std::unordered_map<std::string, std::size_t> code;
      for (std::size_t i = 0; i < vocab.size(); ++i) code.emplace(vocab[i], i);
      if (one_hot) {
        for (std::size_t i = 0; i < vocab.size(); ++i) {
          std::vector<std::optional<double>> v(n, 0.0);
          for (std::size_t r = 0; r < n; ++r) {
            if (c.tokens[r] && *c.tokens[r] == vocab[i]) v[r] = 1.0;
          }
          cols.push_back(Column::make_numeric(c.name + "=" + vocab[i], std::move(v)));
        }
      } else {
        std::vector<std::optional<double>> v(n);
        for (std::size_t r = 0; r < n; ++r) {
          if (!c.tokens[r]) continue;
          auto it = code.find(*c.tokens[r]);
          v[r] = it == code.end() ? -1.0 : static_cast<double>(it->second);
        }
        cols.push_back(Column::make_numeric(c.name, std::move(v)));
      }
    }
    return ds.with_columns(std::move(cols));
  }
  if (const auto* p = std::get_if<QuantileParams>(&params)) {
    return map_numeric(ds, [p](std::size_t j, double x) {
      const auto& ref = p->reference[j];
      if (ref.empty()) return x;
      if (ref.size() == 1 || x <= ref.front()) return x <= ref.front() ? 0.0 : 1.0;
      if (x >= ref.back()) return 1.0;
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(ref.begin(), ref.end(), x) - ref.begin());
      const std::size_t lo = hi - 1;
      const double gap = ref[hi] - ref[lo];
      const double frac = gap > 0.0 ? (x - ref[lo]) / gap : 0.0;
      return (static_cast<double>(lo) + frac) / static_cast<double>(ref.size() - 1);
    });
  }
  if (std::holds_alternative<PowerParams>(params)) {
    return map_numeric(ds, [](std::size_t, double x) {
      return std::copysign(std::log1p(std::abs(x)), x);
    });
  }
  if (std::holds_alternative<RowNormalizeParams>(params)) {
    std::vector<Column> cols = ds.columns();
    for (std::size_t r = 0; r < n; ++r) {
      double ss = 0.0;
      for (const Column& c : cols) {
        if (c.kind == ColumnKind::Numeric && c.numeric[r]) ss += *c.numeric[r] * *c.numeric[r];
      }
      if (ss <= 0.0) continue;
      const double norm = std::sqrt(ss);
      for (Column& c : cols) {
        if (c.kind == ColumnKind::Numeric && c.numeric[r]) *c.numeric[r] /= norm;
      }
    }
    return ds.with_columns(std::move(cols));
  }
  if (const auto* p = std::get_if<BinParams>(&params)) {
    return map_numeric(ds, [p](std::size_t j, double x) {
      const auto& e = p->edges[j];
      return static_cast<double>(std::upper_bound(e.begin(), e.end(), x) - e.begin());
    });
  }
  if (const auto* p = std::get_if<PolynomialParams>(&params)) {
    std::vector<Column> base;
    for (const Column& c : ds.columns()) {
      if (c.kind == ColumnKind::Numeric) base.push_back(c);
    }
    std::vector<Column> out = base;
    auto product = [&](const Column& a, const Column& b, std::string name) {
      std::vector<std::optional<double>> v(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (a.numeric[r] && b.numeric[r]) v[r] = *a.numeric[r] * *b.numeric[r];
      }
      return Column::make_numeric(std::move(name), std::move(v));
    };
    if (p->include_squares) {
      for (const Column& a : base) out.push_back(product(a, a, a.name + "^2"));
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      for (std::size_t k = i + 1; k < base.size(); ++k) {
        out.push_back(product(base[i], base[k], base[i].name + "*" + base[k].name));
      }
    }
    return replace_numeric(ds, std::move(out));
  }
  if (const auto* p = std::get_if<ProjectionParams>(&params)) {
    const NumericBlock b = numeric_block(ds);
    const std::size_t d = b.cols;
    std::vector<Column> out;
    for (std::size_t k = 0; k < p->rank; ++k) {
      std::vector<std::optional<double>> v(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (!b.complete[r]) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          s += p->basis[k * d + j] * (b.values[r * d + j] - p->mean[j]);
        }
        v[r] = s;
      }
      out.push_back(Column::make_numeric(f.spec.name + std::to_string(k), std::move(v)));
    }
    return replace_numeric(ds, std::move(out));
  }
  if (const auto* p = std::get_if<ThresholdParams>(&params)) {
    std::vector<const Column*> numeric;
    for (const Column& c : ds.columns()) {
      if (c.kind == ColumnKind::Numeric) numeric.push_back(&c);
    }
    std::vector<Column> out;
    for (std::size_t t = 0; t < p->feature.size(); ++t) {
      const Column& src = *numeric[p->feature[t]];
      std::vector<std::optional<double>> v(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (src.numeric[r]) v[r] = *src.numeric[r] > p->threshold[t] ? 1.0 : 0.0;
      }
      out.push_back(Column::make_numeric("stump" + std::to_string(t), std::move(v)));
    }
    return replace_numeric(ds, std::move(out));
  }
  if (const auto* p = std::get_if<SelectionParams>(&params)) {
    std::vector<Column> cols;
    std::size_t j = 0;
    std::size_t next = 0;
    for (const Column& c : ds.columns()) {
      if (c.kind != ColumnKind::Numeric) {
        cols.push_back(c);
        continue;
      }
      if (next < p->keep.size() && p->keep[next] == j) {
        cols.push_back(c);
        ++next;
      }
      ++j;
    }
    return ds.with_columns(std::move(cols));
  }
  return ds;
}

}  // namespace

FittedOperator fit(const OperatorSpec& op, const Dataset& train,
                   std::uint64_t seed) {
  if (train.n_rows() == 0) {
    throw Error("EmptyDataset", "cannot fit '" + op.name + "' on zero rows");
  }
  FittedOperator f = identity_of(op);
  f.params = fit_params(op, train, seed);
  for (const Column& c : train.columns()) {
    f.column_names.push_back(c.name);
    f.column_kinds.push_back(c.kind);
  }
  return f;
}

Dataset transform(const FittedOperator& f, const Dataset& ds) {
  if (ds.n_cols() != f.column_names.size()) {
    throw Error("SchemaMismatch", "'" + f.spec.name + "' was fitted on " +
                                      std::to_string(f.column_names.size()) +
                                      " columns, got " +
                                      std::to_string(ds.n_cols()));
  }
  for (std::size_t c = 0; c < ds.n_cols(); ++c) {
    if (ds.column(c).kind != f.column_kinds[c] ||
        ds.column(c).name != f.column_names[c]) {
      throw Error("SchemaMismatch",
                  "column '" + ds.column(c).name + "' differs from fit schema");
    }
  }
  return apply_params(f, ds);
}

std::uint64_t operator_seed(std::uint64_t root_seed, OperatorId id) {
  return derive_seed(root_seed, "operator",
                     static_cast<std::uint64_t>(id.value + 1));
}

namespace {

bool all_finite(const Dataset& ds) {
  for (const Column& c : ds.columns()) {
    if (c.kind != ColumnKind::Numeric) continue;
    for (const auto& x : c.numeric) {
      if (x && !std::isfinite(*x)) return false;
    }
  }
  return true;
}

}  // namespace

TransformedSplit run_pipeline(const Pipeline& p, const SplitDataset& split,
                              const OperatorLibrary& lib,
                              std::uint64_t root_seed) {
  TransformedSplit out{split.train, split.validation};
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j].is_null()) continue;
    const OperatorSpec& spec = lib.op(p[j]);
    const FittedOperator f = fit(spec, out.train, operator_seed(root_seed, p[j]));
    if (f.is_identity()) continue;
    out.train = transform(f, out.train);
    out.validation = transform(f, out.validation);
    if (!all_finite(out.train) || !all_finite(out.validation)) {
      throw Error("PipelineExecutionFailure",
                  "step " + std::to_string(j + 1) + " ('" + spec.name +
                      "') produced a non-finite value");
    }
  }
  return out;
}

}  // namespace prepsearch
