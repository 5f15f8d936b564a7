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

// Tabular datasets: typed columns with first-class missing cells, CSV
// ingestion, a seeded synthetic generator and deterministic splitting.

#ifndef PREPSEARCH_DATASET_HPP
#define PREPSEARCH_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prepsearch {

enum class ColumnKind { Numeric, Categorical };

const char* to_string(ColumnKind kind);

/// One feature column. Exactly one of `numeric` / `tokens` is populated,
/// according to `kind`; std::nullopt marks a missing cell.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<std::optional<double>> numeric;
  std::vector<std::optional<std::string>> tokens;

  static Column make_numeric(std::string name,
                             std::vector<std::optional<double>> values);
  static Column make_categorical(std::string name,
                                 std::vector<std::optional<std::string>> values);

  std::size_t size() const {
    return kind == ColumnKind::Numeric ? numeric.size() : tokens.size();
  }
  bool is_missing(std::size_t row) const {
    return kind == ColumnKind::Numeric ? !numeric[row].has_value()
                                       : !tokens[row].has_value();
  }
  std::size_t missing_count() const;

  bool operator==(const Column&) const = default;
};

/// Immutable feature matrix plus dense class labels.
///
/// Row count and column lengths are always consistent. Datasets that come
/// from outside (CSV, generator) additionally pass validate_source().
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Column> columns,
          std::vector<int> labels, int n_classes,
          std::vector<std::string> label_names = {});

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  int n_classes() const { return n_classes_; }
  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_cols() const { return columns_.size(); }

  std::vector<ColumnKind> column_kinds() const;
  std::size_t count_kind(ColumnKind kind) const;
  std::size_t missing_cells() const;
  std::size_t missing_numeric_cells() const;

  /// Throws EmptyDataset unless the dataset has >= 2 rows, >= 1 feature
  /// column and >= 2 distinct classes present.
  void validate_source() const;

  /// Same labels and row order, new feature columns.
  Dataset with_columns(std::vector<Column> columns) const;
  /// Subset of rows in the given order.
  Dataset select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::vector<int> labels_;
  int n_classes_ = 0;
  std::vector<std::string> label_names_;
};

struct SplitDataset {
  Dataset train;
  Dataset validation;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  /// Source row index of every train / validation row, in split order.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
};

/// Reads an RFC-4180 CSV with a header row. Columns are Numeric when every
/// non-empty cell parses as a finite number, otherwise Categorical. Labels
/// get dense ids in order of first appearance.
Dataset load_csv(const std::string& path, const std::string& label_column);
Dataset parse_csv(const std::string& text, const std::string& label_column,
                  const std::string& name = "csv");

/// Writes `ds` in the format load_csv reads; the label column comes last.
std::string to_csv(const Dataset& ds, const std::string& label_column = "label");
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column = "label");

/// Seeded shuffle; the first floor(fraction * n_rows) rows go to train.
SplitDataset split(const Dataset& ds, std::uint64_t seed, double fraction = 0.8);

struct SynthSpec {
  std::size_t n_rows = 200;
  std::size_t n_numeric = 4;
  std::size_t n_categorical = 1;
  int n_classes = 2;
  /// Per-row probability that one numeric cell is blanked.
  double missing_rate = 0.1;
  /// Per-row probability that one numeric cell becomes an extreme value.
  double outlier_rate = 0.05;
  std::uint64_t seed = 7;
};

/// Labels follow a seeded linear rule over latent features plus noise;
/// observed numeric columns are rescaled and shifted by very different
/// amounts so that preprocessing changes learnability.
Dataset synth_dataset(const SynthSpec& spec);

}  // namespace prepsearch

#endif  // PREPSEARCH_DATASET_HPP
