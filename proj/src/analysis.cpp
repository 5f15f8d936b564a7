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

#include "prepsearch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "prepsearch/common.hpp"

namespace prepsearch {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error("DataError", "pearson needs two equal-length series of >= 2 values");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  // Relative threshold: a series of equal values can leave rounding dust.
  const double eps = 1e-24;
  if (sxx <= eps * (1.0 + mx * mx) * n || syy <= eps * (1.0 + my * my) * n) {
    throw Error("ZeroVariance", "pearson is undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void SignatureMatrix::check() const {
  if (values.size() != operators.size()) {
    throw Error("DataError", "signature matrix has a row count mismatch");
  }
  for (const auto& row : values) {
    if (row.size() != contexts.size()) {
      throw Error("DataError", "signature matrix is not rectangular");
    }
  }
}

SignatureMatrix signatures_from_runs(
    const OperatorLibrary& lib,
    const std::vector<std::pair<std::string, SearchResult>>& runs, double fill) {
  SignatureMatrix sig;
  for (const OperatorSpec& s : lib.ops()) sig.operators.push_back(s.name);
  sig.values.assign(lib.size(), {});
  for (const auto& [name, run] : runs) {
    const std::size_t length = run.pipeline.size();
    for (std::size_t j = 1; j <= length; ++j) {
      sig.contexts.push_back(name + "@" + std::to_string(j));
      std::vector<double> column(lib.size(), fill);
      for (const OperatorValue& v : run.operator_table) {
        if (v.position == j) column[static_cast<std::size_t>(v.op.value)] = v.estimate.value;
      }
      for (std::size_t i = 0; i < lib.size(); ++i) sig.values[i].push_back(column[i]);
    }
  }
  return sig;
}

namespace {

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  out.pairs = xs.size();
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

CoherenceReport coherence_report(const SignatureMatrix& sig,
                                 std::span<const int> category) {
  sig.check();
  const std::size_t n = sig.operators.size();
  if (category.size() != n) {
    throw Error("DataError", "one category per signature row is required");
  }
  CoherenceReport report;
  report.correlation.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  std::vector<double> within, between;
  for (std::size_t i = 0; i < n; ++i) {
    report.correlation[i][i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = 0.0;
      try {
        r = pearson(sig.values[i], sig.values[j]);
      } catch (const Error& e) {
        if (e.code() != "ZeroVariance") throw;
        ++report.excluded_pairs;
        continue;
      }
      report.correlation[i][j] = report.correlation[j][i] = r;
      (category[i] == category[j] ? within : between).push_back(r);
    }
  }
  if (!within.empty()) report.within = mean_sd(within);
  if (!between.empty()) report.between = mean_sd(between);
  return report;
}

WinRateCorrelation shapley_winrate_correlation(std::span<const WinRateEvidence> data) {
  struct Acc {
    double value_sum = 0.0;
    std::size_t value_count = 0;
    std::size_t wins = 0;
    std::size_t appearances = 0;
  };
  std::map<int, Acc> acc;
  for (const WinRateEvidence& d : data) {
    for (const auto& [op, v] : d.values) {
      acc[op.value].value_sum += v;
      ++acc[op.value].value_count;
    }
    if (d.evaluations.empty()) continue;
    std::vector<double> scores;
    for (const auto& e : d.evaluations) scores.push_back(e.second);
    std::sort(scores.begin(), scores.end());
    const std::size_t m = scores.size();
    const double median =
        m % 2 == 1 ? scores[m / 2] : 0.5 * (scores[m / 2 - 1] + scores[m / 2]);
    for (const auto& [p, score] : d.evaluations) {
      std::vector<int> seen;
      for (OperatorId op : p.slots) {
        if (op.is_null() || std::find(seen.begin(), seen.end(), op.value) != seen.end()) {
          continue;
        }
        seen.push_back(op.value);
        ++acc[op.value].appearances;
        if (score > median) ++acc[op.value].wins;
      }
    }
  }
  WinRateCorrelation out;
  std::vector<double> xs, ys;
  for (const auto& [id, a] : acc) {
    if (a.value_count == 0 || a.appearances == 0) continue;
    WinRateRow row;
    row.op = OperatorId{id};
    row.mean_value = a.value_sum / static_cast<double>(a.value_count);
    row.win_rate = static_cast<double>(a.wins) / static_cast<double>(a.appearances);
    row.appearances = a.appearances;
    xs.push_back(row.mean_value);
    ys.push_back(row.win_rate);
    out.rows.push_back(row);
  }
  if (out.rows.size() < 5) {
    throw Error("InsufficientData", "win-rate correlation needs at least 5 operators");
  }
  out.r = pearson(xs, ys);
  return out;
}

WinRateEvidence evidence_from(const SearchResult& result, const EvalCache& cache) {
  WinRateEvidence ev;
  for (const auto& [p, outcome] : cache.entries()) ev.evaluations.emplace_back(p, outcome.score);
  for (const OperatorValue& v : result.operator_table) {
    ev.values.emplace_back(v.op, v.estimate.value);
  }
  return ev;
}

std::vector<PositionProfile> position_profiles(std::span<const OperatorValue> table) {
  std::map<int, PositionProfile> by_op;
  for (const OperatorValue& v : table) {
    PositionProfile& p = by_op[v.op.value];
    p.op = v.op;
    p.values.emplace_back(v.position, v.estimate.value);
  }
  std::vector<PositionProfile> out;
  for (auto& [id, p] : by_op) {
    if (p.values.size() < 2) continue;
    std::sort(p.values.begin(), p.values.end());
    double lo = p.values.front().second, hi = lo;
    bool pos = false, neg = false;
    for (const auto& [_, v] : p.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      pos = pos || v > 0.0;
      neg = neg || v < 0.0;
    }
    p.gap = hi - lo;
    p.sign_change = pos && neg;
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<double> early_late_ratio(std::span<const OperatorValue> table,
                                       std::span<const OperatorId> members,
                                       std::size_t length) {
  double early = 0.0, late = 0.0;
  std::size_t n_early = 0, n_late = 0;
  for (const OperatorValue& v : table) {
    if (std::find(members.begin(), members.end(), v.op) == members.end()) continue;
    if (2 * v.position <= length) {
      early += std::abs(v.estimate.value);
      ++n_early;
    } else {
      late += std::abs(v.estimate.value);
      ++n_late;
    }
  }
  if (n_early == 0 || n_late == 0 || late == 0.0) return std::nullopt;
  return (early / static_cast<double>(n_early)) / (late / static_cast<double>(n_late));
}

std::string correlation_csv(const CoherenceReport& report,
                            const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "operator";
  for (const auto& n : names) os << ',' << csv_field(n);
  os << '\n';
  for (std::size_t i = 0; i < report.correlation.size(); ++i) {
    os << csv_field(i < names.size() ? names[i] : std::to_string(i));
    for (double r : report.correlation[i]) os << ',' << number(r);
    os << '\n';
  }
  return os.str();
}

std::string signature_csv(const SignatureMatrix& sig) {
  sig.check();
  std::ostringstream os;
  os << "operator";
  for (const auto& c : sig.contexts) os << ',' << csv_field(c);
  os << '\n';
  for (std::size_t i = 0; i < sig.operators.size(); ++i) {
    os << csv_field(sig.operators[i]);
    for (double v : sig.values[i]) os << ',' << number(v);
    os << '\n';
  }
  return os.str();
}

std::string winrate_csv(const WinRateCorrelation& corr, const OperatorLibrary& lib) {
  std::ostringstream os;
  os << "operator,mean_value,win_rate,appearances\n";
  for (const WinRateRow& row : corr.rows) {
    os << csv_field(lib.op(row.op).name) << ',' << number(row.mean_value) << ','
       << number(row.win_rate) << ',' << row.appearances << '\n';
  }
  return os.str();
}

}  // namespace prepsearch
