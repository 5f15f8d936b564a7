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

#include "prepsearch/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "prepsearch/common.hpp"

namespace prepsearch {

const char* to_string(ColumnKind kind) {
  return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

Column Column::make_numeric(std::string name,
                            std::vector<std::optional<double>> values) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::Numeric;
  c.numeric = std::move(values);
  return c;
}

Column Column::make_categorical(std::string name,
                                std::vector<std::optional<std::string>> values) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::Categorical;
  c.tokens = std::move(values);
  return c;
}

std::size_t Column::missing_count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < size(); ++r) n += is_missing(r) ? 1 : 0;
  return n;
}

Dataset::Dataset(std::string name, std::vector<Column> columns,
                 std::vector<int> labels, int n_classes,
                 std::vector<std::string> label_names)
    : name_(std::move(name)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      label_names_(std::move(label_names)) {
  for (const Column& c : columns_) {
    const bool other_empty = c.kind == ColumnKind::Numeric ? c.tokens.empty()
                                                           : c.numeric.empty();
    if (c.size() != labels_.size() || !other_empty) {
      throw Error("SchemaMismatch", "column '" + c.name +
                                        "' does not match the label count");
    }
  }
  for (int y : labels_) {
    if (y < 0 || y >= n_classes_) {
      throw Error("SchemaMismatch", "label id out of range");
    }
  }
}

std::vector<ColumnKind> Dataset::column_kinds() const {
  std::vector<ColumnKind> kinds;
  kinds.reserve(columns_.size());
  for (const Column& c : columns_) kinds.push_back(c.kind);
  return kinds;
}

std::size_t Dataset::count_kind(ColumnKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(columns_.begin(), columns_.end(),
                    [kind](const Column& c) { return c.kind == kind; }));
}

std::size_t Dataset::missing_cells() const {
  std::size_t n = 0;
  for (const Column& c : columns_) n += c.missing_count();
  return n;
}

std::size_t Dataset::missing_numeric_cells() const {
  std::size_t n = 0;
  for (const Column& c : columns_) {
    if (c.kind == ColumnKind::Numeric) n += c.missing_count();
  }
  return n;
}

void Dataset::validate_source() const {
  if (n_rows() < 2) throw Error("EmptyDataset", "dataset needs at least 2 rows");
  if (n_cols() < 1) {
    throw Error("EmptyDataset", "dataset needs at least 1 feature column");
  }
  std::set<int> present(labels_.begin(), labels_.end());
  if (present.size() < 2) {
    throw Error("EmptyDataset", "dataset needs at least 2 classes");
  }
}

Dataset Dataset::with_columns(std::vector<Column> columns) const {
  return Dataset(name_, std::move(columns), labels_, n_classes_, label_names_);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const Column& c : columns_) {
    Column out;
    out.name = c.name;
    out.kind = c.kind;
    if (c.kind == ColumnKind::Numeric) {
      out.numeric.reserve(rows.size());
      for (std::size_t r : rows) out.numeric.push_back(c.numeric[r]);
    } else {
      out.tokens.reserve(rows.size());
      for (std::size_t r : rows) out.tokens.push_back(c.tokens[r]);
    }
    cols.push_back(std::move(out));
  }
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(labels_[r]);
  return Dataset(name_, std::move(cols), std::move(labels), n_classes_,
                 label_names_);
}

namespace {

// Splits CSV text into records. Returns the row index (0 = header) of the
// first malformed record through `bad_row`, or -1.
std::vector<std::vector<std::string>> tokenize_csv(const std::string& text,
                                                   long& bad_row) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bad_row = -1;

  auto end_record = [&]() {
    record.push_back(std::move(field));
    field.clear();
    // A trailing blank line is not a record.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) {
      rows.push_back(std::move(record));
    }
    record.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          bad_row = static_cast<long>(rows.size());
          return rows;
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    bad_row = static_cast<long>(rows.size());
    return rows;
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return rows;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& label_column,
                  const std::string& name) {
  long bad_row = -1;
  auto rows = tokenize_csv(text, bad_row);
  if (bad_row >= 0) {
    throw Error("UnparseableRow",
                "malformed CSV record at row " + std::to_string(bad_row));
  }
  if (rows.empty()) throw Error("EmptyDataset", "CSV has no header");
  const auto& header = rows[0];
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw Error("MissingLabelColumn",
                "label column '" + label_column + "' not found");
  }
  const std::size_t label_idx =
      static_cast<std::size_t>(label_it - header.begin());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error("UnparseableRow", "row " + std::to_string(r) + " has " +
                                        std::to_string(rows[r].size()) +
                                        " fields, expected " +
                                        std::to_string(header.size()));
    }
  }
  if (header.size() < 2) {
    throw Error("EmptyDataset", "CSV has no feature columns");
  }
  const std::size_t n = rows.size() - 1;
  if (n == 0) throw Error("EmptyDataset", "CSV has no data rows");

  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::unordered_map<std::string, int> label_ids;
  labels.reserve(n);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string& token = rows[r][label_idx];
    if (token.empty()) {
      throw Error("UnparseableRow",
                  "row " + std::to_string(r) + " has an empty label");
    }
    auto [it, inserted] =
        label_ids.emplace(token, static_cast<int>(label_names.size()));
    if (inserted) label_names.push_back(token);
    labels.push_back(it->second);
  }

  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx) continue;
    bool all_numeric = true;
    for (std::size_t r = 1; r < rows.size() && all_numeric; ++r) {
      const std::string& cell = rows[r][c];
      if (!cell.empty() && !parse_number(cell)) all_numeric = false;
    }
    if (all_numeric) {
      std::vector<std::optional<double>> values;
      values.reserve(n);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string& cell = rows[r][c];
        values.push_back(cell.empty() ? std::nullopt : parse_number(cell));
      }
      columns.push_back(Column::make_numeric(header[c], std::move(values)));
    } else {
      std::vector<std::optional<std::string>> values;
      values.reserve(n);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string& cell = rows[r][c];
        values.push_back(cell.empty() ? std::nullopt
                                      : std::optional<std::string>(cell));
      }
      columns.push_back(Column::make_categorical(header[c], std::move(values)));
    }
  }
  const int n_classes = static_cast<int>(label_names.size());
  Dataset ds(name, std::move(columns), std::move(labels), n_classes,
             std::move(label_names));
  ds.validate_source();
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("DataError", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  return parse_csv(buf.str(), label_column, name);
}

std::string to_csv(const Dataset& ds, const std::string& label_column) {
  std::ostringstream out;
  for (const Column& c : ds.columns()) out << quote(c.name) << ',';
  out << quote(label_column) << '\n';
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (const Column& c : ds.columns()) {
      if (c.kind == ColumnKind::Numeric) {
        if (c.numeric[r]) out << format_double(*c.numeric[r]);
      } else if (c.tokens[r]) {
        out << quote(*c.tokens[r]);
      }
      out << ',';
    }
    const int y = ds.labels()[r];
    if (static_cast<std::size_t>(y) < ds.label_names().size()) {
      out << quote(ds.label_names()[static_cast<std::size_t>(y)]);
    } else {
      out << y;
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("DataError", "cannot write '" + path + "'");
  out << to_csv(ds, label_column);
}

SplitDataset split(const Dataset& ds, std::uint64_t seed, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("DegenerateSplit", "train fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.n_rows();
  const auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw Error("DegenerateSplit", "split leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  SplitDataset out;
  out.split_seed = seed;
  out.train_fraction = fraction;
  out.train_rows.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  out.validation_rows.assign(order.begin() + static_cast<long>(n_train),
                             order.end());
  out.train = ds.select_rows(out.train_rows);
  out.validation = ds.select_rows(out.validation_rows);
  return out;
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.n_rows < 2 || spec.n_numeric == 0 || spec.n_classes < 2) {
    throw Error("ConfigError",
                "synthetic spec needs n_rows >= 2, n_numeric >= 1, "
                "n_classes >= 2");
  }
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0) ||
      !(spec.outlier_rate >= 0.0 && spec.outlier_rate < 1.0)) {
    throw Error("ConfigError", "rates must lie in [0, 1)");
  }
  const std::size_t n = spec.n_rows;
  const std::size_t d = spec.n_numeric;
  const auto k = static_cast<std::size_t>(spec.n_classes);
  constexpr std::size_t kLevels = 4;

  Rng model_rng(derive_seed(spec.seed, "synth.model"));
  std::vector<double> weights(k * d);
  for (double& w : weights) w = standard_normal(model_rng);
  std::vector<double> cat_effect(k * spec.n_categorical * kLevels);
  for (double& e : cat_effect) e = 0.8 * standard_normal(model_rng);
  // Observed column j = scale_j * latent_j + shift_j; the spread of scales
  // is what makes scaling operators matter to a gradient-descent learner.
  std::vector<double> scale(d), shift(d);
  for (std::size_t j = 0; j < d; ++j) {
    scale[j] = std::pow(10.0, static_cast<double>(j % 4) - 1.0);
    shift[j] = 5.0 * standard_normal(model_rng) * scale[j];
  }

  Rng data_rng(derive_seed(spec.seed, "synth.rows"));
  std::vector<std::vector<std::optional<double>>> num(
      d, std::vector<std::optional<double>>(n));
  std::vector<std::vector<std::optional<std::string>>> cat(
      spec.n_categorical, std::vector<std::optional<std::string>>(n));
  std::vector<int> labels(n);
  std::vector<double> latent(d);
  std::vector<double> logits(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) latent[j] = standard_normal(data_rng);
    std::fill(logits.begin(), logits.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        logits[c] += weights[c * d + j] * latent[j];
      }
      logits[c] += 0.3 * standard_normal(data_rng);
    }
    for (std::size_t q = 0; q < spec.n_categorical; ++q) {
      const std::size_t level = uniform_index(data_rng, kLevels);
      for (std::size_t c = 0; c < k; ++c) {
        logits[c] += cat_effect[(c * spec.n_categorical + q) * kLevels + level];
      }
      cat[q][r] = "c" + std::to_string(q) + "_" + std::to_string(level);
    }
    labels[r] = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    for (std::size_t j = 0; j < d; ++j) num[j][r] = scale[j] * latent[j] + shift[j];

    if (uniform_unit(data_rng) < spec.outlier_rate) {
      const std::size_t j = uniform_index(data_rng, d);
      const double sign = uniform_unit(data_rng) < 0.5 ? -1.0 : 1.0;
      num[j][r] = shift[j] + sign * 40.0 * scale[j] *
                                 (1.0 + std::abs(standard_normal(data_rng)));
    }
    if (uniform_unit(data_rng) < spec.missing_rate) {
      num[uniform_index(data_rng, d)][r] = std::nullopt;
    }
  }

  std::vector<Column> columns;
  for (std::size_t j = 0; j < d; ++j) {
    columns.push_back(
        Column::make_numeric("x" + std::to_string(j), std::move(num[j])));
  }
  for (std::size_t q = 0; q < spec.n_categorical; ++q) {
    columns.push_back(
        Column::make_categorical("cat" + std::to_string(q), std::move(cat[q])));
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back("class" + std::to_string(c));
  return Dataset("synth-" + std::to_string(spec.seed), std::move(columns),
                 std::move(labels), spec.n_classes, std::move(names));
}

}  // namespace prepsearch
