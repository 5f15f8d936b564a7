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

// prepsearch run <config> | compare <config> | library

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "prepsearch/common.hpp"
#include "prepsearch/config.hpp"
#include "prepsearch/runner.hpp"

namespace {

constexpr const char* kConfigHelp = R"(Config file (INI):
  [data]     csv = path, label = label, train_fraction = 0.8,
             split_seed = <search seed>
  [synth]    n_rows = 200, n_numeric = 4, n_categorical = 1, n_classes = 2,
             missing_rate = 0.1, outlier_rate = 0.05, seed = 7
  [library]  operators = comma list (default: all 23 built-in operators)
  [search]   method = shapleypipe | random | greedy | exhaustive | algorithm1
                      | ablation:{position_agnostic,category_only,
                                  random_sampling,no_mab}
             length = 6, n_perm = 75, n_perm_refine = 75, n_pretrain = 2000,
             seed = 42, workers = min(cores, 16), allow_null_category = true,
             bandit_batch = 8, use_bandits = true, reselect_prefix = false,
             exploration = 1.4142135623730951, budget = 100,
             suffix_mode = sampled, exhaustive_cap = 20000, final_eval = false
  [learner]  learning_rate = 0.1, iterations = 300, l2 = 0.0001
  [output]   report = path (default: stdout), cache = path
  [compare]  methods = comma list, e.g. random@100, greedy, shapleypipe
Give exactly one dataset source: [data] csv or a [synth] section.)";

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> cache;
  std::optional<std::string> out;
};

prepsearch::RunConfig configure(const std::string& path, const Overrides& o) {
  prepsearch::RunConfig cfg = prepsearch::load_config(path);
  if (o.seed) cfg.search.seed = *o.seed;
  if (o.workers) {
    if (*o.workers < 1) throw prepsearch::Error("ConfigError", "--workers must be >= 1");
    cfg.search.workers = *o.workers;
  }
  if (o.cache) cfg.cache_path = *o.cache;
  if (o.out) cfg.report_path = *o.out;
  return cfg;
}

void emit(const prepsearch::Json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw prepsearch::Error("ConfigError", "cannot write report to '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical value-guided search over data-preparation pipelines"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "INI config file")->required();
    sub->add_option("--seed", o.seed, "Root seed (overrides [search] seed)");
    sub->add_option("--workers", o.workers, "Evaluation threads (overrides [search] workers)");
    sub->add_option("--cache", o.cache, "Evaluation cache file (JSONL), loaded and saved");
    sub->add_option("--out", o.out, "Report path (default: stdout)");
  };
  CLI::App* run = app.add_subcommand("run", "Run the configured method and write a JSON report");
  add_common(run);
  CLI::App* compare =
      app.add_subcommand("compare", "Run every [compare] method on one split and tabulate");
  add_common(compare);
  CLI::App* library = app.add_subcommand("library", "Print the built-in operator library");

  CLI11_PARSE(app, argc, argv);

  try {
    if (library->parsed()) {
      emit(prepsearch::library_json(prepsearch::builtin_library()), "");
      return 0;
    }
    prepsearch::RunConfig cfg = configure(config_path, o);
    emit(run->parsed() ? prepsearch::run_report(cfg) : prepsearch::compare_report(cfg),
         cfg.report_path);
    return 0;
  } catch (const prepsearch::Error& e) {
    std::cout << prepsearch::error_json(e.code(), e.what()).dump(2) << "\n";
    return e.code() == "SearchSpaceTooLarge" ? 3 : 2;
  } catch (const std::exception& e) {
    std::cout << prepsearch::error_json("InternalError", e.what()).dump(2) << "\n";
    return 1;
  }
}
