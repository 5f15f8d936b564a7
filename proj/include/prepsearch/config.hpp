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

// Run configuration in INI form:
//
//   [data]     csv, label, train_fraction, split_seed
//   [synth]    n_rows, n_numeric, n_categorical, n_classes, missing_rate,
//              outlier_rate, seed
//   [library]  operators (comma list; empty = built-in library)
//   [search]   method, length, n_perm, n_perm_refine, n_pretrain, seed,
//              workers, allow_null_category, bandit_batch, use_bandits,
//              reselect_prefix, exploration, budget, suffix_mode,
//              exhaustive_cap, final_eval
//   [learner]  learning_rate, iterations, l2
//   [output]   report, cache
//   [compare]  methods (comma list; "random@250" overrides the budget)
//
// Exactly one of [data] csv or a [synth] section selects the dataset.
// Comments go on their own line, starting with '#' or ';'.

#ifndef PREPSEARCH_CONFIG_HPP
#define PREPSEARCH_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prepsearch/dataset.hpp"
#include "prepsearch/hierarchical.hpp"
#include "prepsearch/learner.hpp"
#include "prepsearch/shapley.hpp"

namespace prepsearch {

struct RunConfig {
  std::string csv_path;
  std::string label_column = "label";
  std::optional<SynthSpec> synth;
  double train_fraction = 0.8;
  /// Defaults to search.seed.
  std::optional<std::uint64_t> split_seed;
  LearnerConfig learner;
  std::vector<std::string> operators;

  /// shapleypipe | random | greedy | exhaustive | algorithm1 |
  /// ablation:{position_agnostic,category_only,random_sampling,no_mab}
  std::string method = "shapleypipe";
  SearchConfig search;
  /// Draws for method=random.
  std::uint64_t budget = 100;
  /// method=algorithm1 suffix handling; sampled mode uses search.n_perm.
  SuffixMode suffix_mode = SuffixMode::Sampled;
  std::uint64_t exhaustive_cap = kDefaultExhaustiveCap;
  /// Re-evaluate the returned pipeline once for methods that do not do so
  /// themselves (random, greedy, exhaustive).
  bool final_eval = false;

  std::string report_path;
  std::string cache_path;
  std::vector<std::string> compare_methods;

  std::uint64_t effective_split_seed() const { return split_seed.value_or(search.seed); }
};

/// min(hardware threads, 16), at least 1.
int default_workers();

/// Throws ConfigError on syntax errors, unknown sections or keys, bad
/// values, and a missing or doubled dataset source.
RunConfig parse_config(const std::string& ini_text);
RunConfig load_config(const std::string& path);

/// Every setting as (section, key, value) in a fixed order; parse_config of
/// the to_ini text gives back an equal configuration.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
config_entries(const RunConfig& cfg);
std::string to_ini(const RunConfig& cfg);

/// Splits "random@250" into ("random", 250).
std::pair<std::string, std::optional<std::uint64_t>> split_method(const std::string& spec);

}  // namespace prepsearch

#endif  // PREPSEARCH_CONFIG_HPP
