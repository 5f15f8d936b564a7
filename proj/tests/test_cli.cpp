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

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "prepsearch/config.hpp"
#include "prepsearch/runner.hpp"
#include "test_util.hpp"

using namespace prepsearch;
using prepsearch::testing::error_code;

namespace {

/// Small synthetic run: 7 operators, M = 3.
const char* kSmallRun = R"([synth]
n_rows = 120
n_categorical = 0
seed = 4

[library]
operators = impute_mean, impute_median, minmax, standard, kbins, polynomial, pca_rank2

[search]
length = 3
n_perm = 8
n_perm_refine = 8
n_pretrain = 40
seed = 9
workers = 2
)";

RunConfig small_run(const std::string& extra = "") {
  return parse_config(std::string(kSmallRun) + extra);
}

}  // namespace

TEST_CASE("config: defaults and a synthetic source") {
  const RunConfig cfg = parse_config("[synth]\n");
  REQUIRE(cfg.synth.has_value());
  CHECK(cfg.synth->n_rows == SynthSpec{}.n_rows);
  CHECK(cfg.method == "shapleypipe");
  CHECK(cfg.search.length == 6);
  CHECK(cfg.search.n_perm == 75);
  CHECK(cfg.search.n_perm_refine == 75);
  CHECK(cfg.search.n_pretrain == 2000);
  CHECK(cfg.search.allow_null_category);
  CHECK(cfg.search.workers >= 1);
  CHECK(cfg.search.workers <= 16);
  CHECK(cfg.effective_split_seed() == cfg.search.seed);
}

TEST_CASE("config: errors") {
  CHECK(error_code([] { parse_config("[search]\nlength = 3\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[data]\ncsv = x.csv\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nlenght = 3\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[extras]\nx = 1\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nlength = 0\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nlength = three\n"); }) ==
        "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nworkers = 0\n"); }) == "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nmethod = annealing\n"); }) ==
        "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[search]\nmethod = ablation:greedy\n"); }) ==
        "UnknownVariant");
  CHECK(error_code([] { parse_config("[synth]\n[data]\ntrain_fraction = 1.0\n"); }) ==
        "ConfigError");
  CHECK(error_code([] { parse_config("[synth]\n[compare]\nmethods = random@x, greedy\n"); }) ==
        "ConfigError");
  CHECK(error_code([] { parse_config("[synth\n"); }) == "ConfigError");
}

TEST_CASE("config: to_ini round-trips") {
  RunConfig cfg = small_run(R"(
[output]
report = out.json
[compare]
methods = random@250, greedy, shapleypipe
)");
  cfg.search.exploration = 0.7071067811865476;
  cfg.learner.learning_rate = 0.05;
  cfg.split_seed = 77;
  const RunConfig back = parse_config(to_ini(cfg));
  CHECK(to_ini(back) == to_ini(cfg));
  CHECK(back.search.exploration == cfg.search.exploration);
  CHECK(back.split_seed == cfg.split_seed);
  CHECK(back.compare_methods == cfg.compare_methods);
  CHECK(back.operators == cfg.operators);
}

TEST_CASE("config: split_method") {
  CHECK(split_method("random@250") == std::pair<std::string, std::optional<std::uint64_t>>{"random", 250});
  CHECK(split_method("greedy").first == "greedy");
  CHECK_FALSE(split_method("greedy").second.has_value());
}

TEST_CASE("run: report keys, determinism modulo timings") {
  const RunConfig cfg = small_run();
  const Json a = run_report(cfg);
  const Json b = run_report(cfg);
  std::vector<std::string> keys;
  for (auto it = a.begin(); it != a.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"tool", "command", "method", "seed", "config",
                                         "dataset", "library", "cache", "result", "timings"});
  CHECK(strip_timings(a).dump() == strip_timings(b).dump());
  CHECK_FALSE(strip_timings(a).contains("timings"));
}

TEST_CASE("run: worker count does not change the report") {
  RunConfig one = small_run();
  one.search.workers = 1;
  RunConfig four = small_run();
  four.search.workers = 4;
  Json a = strip_timings(run_report(one));
  Json b = strip_timings(run_report(four));
  a["config"].erase("search");
  b["config"].erase("search");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("run: random search ledger equals its budget") {
  const RunConfig cfg = small_run("method = random\nbudget = 100\n");
  const Json r = run_report(cfg);
  CHECK(r["result"]["ledger"]["algorithmic_calls"] == 100);
  const RunConfig with_final = small_run("method = random\nbudget = 100\nfinal_eval = true\n");
  CHECK(run_report(with_final)["result"]["ledger"]["algorithmic_calls"] == 101);
}

TEST_CASE("run: exhaustive above the cap is refused") {
  const RunConfig cfg = small_run("method = exhaustive\nexhaustive_cap = 100\n");
  CHECK(error_code([&] { run_report(cfg); }) == "SearchSpaceTooLarge");
}

TEST_CASE("run: shapleypipe ledger matches the budget formulas") {
  const RunConfig cfg = small_run();
  const Json r = run_report(cfg);
  const Json& budget = r["result"]["budget"];
  const Json& ledger = r["result"]["ledger"];
  CHECK(budget["expected_total"] == ledger["algorithmic_calls"]);
  const std::uint64_t s1 = stage1_calls(3, configured_library(cfg).n_categories(), 8);
  CHECK(budget["stage1_formula"] == s1);
  CHECK(ledger["algorithmic_calls"].get<std::uint64_t>() ==
        40 + s1 + budget["stage2_formula"].get<std::uint64_t>() + 1);
}

TEST_CASE("run: echoed config reproduces the pipeline") {
  const RunConfig cfg = small_run();
  const Json first = run_report(cfg);
  const RunConfig echoed = config_from_json(first["config"]);
  const Json second = run_report(echoed);
  CHECK(second["result"]["pipeline"] == first["result"]["pipeline"]);
  CHECK(strip_timings(second).dump() == strip_timings(first).dump());
}

TEST_CASE("run: cache file warms a second run") {
  const auto path = std::filesystem::temp_directory_path() / "prepsearch_test_cache.jsonl";
  std::filesystem::remove(path);
  RunConfig cfg = small_run();
  cfg.cache_path = path.string();
  const Json cold = run_report(cfg);
  CHECK(std::filesystem::exists(path));
  const Json warm = run_report(cfg);
  CHECK(warm["result"]["pipeline"] == cold["result"]["pipeline"]);
  CHECK(warm["result"]["ledger"]["unique_evaluations"] == 0);
  CHECK(warm["result"]["ledger"]["algorithmic_calls"] ==
        cold["result"]["ledger"]["algorithmic_calls"]);
  std::filesystem::remove(path);
}

TEST_CASE("compare: rows, shared seed, exhaustive is the maximum") {
  const RunConfig cfg = small_run(R"(
[compare]
methods = random@100, greedy, shapleypipe, exhaustive
)");
  const Json r = compare_report(cfg);
  const Json& rows = r["rows"];
  REQUIRE(rows.size() == 4);
  double best = -1.0;
  for (const Json& row : rows) {
    CHECK(row["seed"] == cfg.search.seed);
    for (const char* key : {"method", "score", "algorithmic_calls", "unique_evaluations",
                            "cache_hits", "pipeline"}) {
      CHECK(row.contains(key));
    }
    best = std::max(best, row["score"].get<double>());
  }
  CHECK(rows[0]["method"] == "random@100");
  CHECK(rows[0]["algorithmic_calls"] == 100);
  CHECK(rows[1]["algorithmic_calls"] == greedy_calls(7, 3));
  CHECK(rows[3]["score"].get<double>() == best);
  CHECK(rows[3]["unique_evaluations"] == 512);
}

TEST_CASE("compare: needs two methods") {
  const RunConfig cfg = small_run("[compare]\nmethods = greedy\n");
  CHECK(error_code([&] { compare_report(cfg); }) == "ConfigError");
}

TEST_CASE("data: csv source and its errors") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = dir / "prepsearch_cli.csv";
  SynthSpec spec;
  spec.n_rows = 80;
  spec.n_categorical = 0;
  write_csv(synth_dataset(spec), csv.string());
  const std::string head = "[data]\ncsv = " + csv.string() + "\n";
  RunConfig cfg = parse_config(head + "[search]\nmethod = greedy\nlength = 2\n");
  const Json r = run_report(cfg);
  CHECK(r["dataset"]["rows"] == 80);
  cfg.label_column = "target";
  CHECK(error_code([&] { run_report(cfg); }) == "MissingLabelColumn");
  cfg.csv_path = (dir / "prepsearch_missing.csv").string();
  CHECK_FALSE(error_code([&] { run_report(cfg); }).empty());
  std::filesystem::remove(csv);
}

TEST_CASE("error_json shape") {
  const Json e = error_json("ConfigError", "bad key");
  CHECK(e["error"]["code"] == "ConfigError");
  CHECK(e["error"]["message"] == "bad key");
}
