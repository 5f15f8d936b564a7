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

#include "prepsearch/runner.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include "prepsearch/common.hpp"
#include "prepsearch/shapley.hpp"

namespace prepsearch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Json estimate_json(const ShapleyEstimate& e) {
  return Json{{"value", e.value},
              {"standard_error", e.standard_error()},
              {"samples", e.n_samples}};
}

std::string category_name(CategoryId c, const OperatorLibrary& lib) {
  return c.is_null() ? "NULL" : lib.category(c).name;
}

std::string op_name(OperatorId op, const OperatorLibrary& lib) {
  return op.is_null() ? "NULL" : lib.op(op).name;
}

MethodOutcome finish(MethodOutcome out, Evaluator& eval, Clock::time_point start) {
  out.ledger = eval.ledger();
  out.cache_hit_rate = eval.cache().hit_rate();
  out.seconds = seconds_since(start);
  return out;
}

std::string cache_file_for(const std::string& base, const std::string& method) {
  std::string tag = method;
  for (char& c : tag) {
    if (c == ':' || c == '@' || c == '/') c = '_';
  }
  return base + "." + tag;
}

}  // namespace

OperatorLibrary configured_library(const RunConfig& cfg) {
  OperatorLibrary lib = builtin_library();
  return cfg.operators.empty() ? lib : lib.subset(cfg.operators);
}

Dataset configured_dataset(const RunConfig& cfg) {
  Dataset ds = cfg.synth ? synth_dataset(*cfg.synth) : load_csv(cfg.csv_path, cfg.label_column);
  ds.validate_source();
  return ds;
}

Json to_json(const LedgerSnapshot& ledger) {
  Json stages = Json::object();
  for (std::size_t s = 0; s < kStageCount; ++s) {
    stages[to_string(static_cast<Stage>(s))] = Json{{"calls", ledger.stage_calls[s]},
                                                    {"unique", ledger.stage_unique[s]}};
  }
  return Json{{"algorithmic_calls", ledger.algorithmic_calls},
              {"unique_evaluations", ledger.unique_evaluations},
              {"cache_hits", ledger.cache_hits()},
              {"stages", stages}};
}

Json to_json(const Pipeline& p, const OperatorLibrary& lib) {
  Json ids = Json::array();
  Json names = Json::array();
  for (OperatorId op : p.slots) {
    ids.push_back(op.value);
    names.push_back(op_name(op, lib));
  }
  return Json{{"ids", ids}, {"names", names}};
}

Json to_json(const SearchResult& r, const OperatorLibrary& lib) {
  Json seq = Json::array();
  for (CategoryId c : r.category_sequence) seq.push_back(category_name(c, lib));
  Json reps = Json::array();
  for (OperatorId op : r.stage1_representatives) reps.push_back(op_name(op, lib));

  Json cat_table = Json::array();
  for (std::size_t j = 0; j < r.category_table.size(); ++j) {
    for (std::size_t k = 0; k < r.category_table[j].size(); ++k) {
      Json row{{"position", j + 1}, {"category", lib.categories()[k].name}};
      row.update(estimate_json(r.category_table[j][k]));
      cat_table.push_back(std::move(row));
    }
  }
  Json op_table = Json::array();
  for (const OperatorValue& v : r.operator_table) {
    Json row{{"position", v.position}, {"operator", op_name(v.op, lib)}};
    row.update(estimate_json(v.estimate));
    op_table.push_back(std::move(row));
  }
  Json bandits = Json::array();
  for (const BanditState& b : r.bandits) {
    Json arms = Json::array();
    for (const ArmStats& a : b.arms()) {
      arms.push_back(Json{{"operator", op_name(a.op, lib)}, {"pulls", a.pulls}, {"mean", a.mean}});
    }
    bandits.push_back(Json{{"category", category_name(b.category(), lib)},
                           {"total_pulls", b.total_pulls()},
                           {"arms", arms}});
  }
  return Json{{"pipeline", to_json(r.pipeline, lib)},
              {"score", r.score},
              {"category_sequence", seq},
              {"stage1_representatives", reps},
              {"category_values", cat_table},
              {"operator_values", op_table},
              {"ledger", to_json(r.ledger)},
              {"cache_hit_rate", r.cache_hit_rate},
              {"bandits", bandits}};
}

Json library_json(const OperatorLibrary& lib) {
  Json cats = Json::array();
  for (const Category& c : lib.categories()) {
    Json members = Json::array();
    for (OperatorId op : c.members) members.push_back(lib.op(op).name);
    cats.push_back(Json{{"id", c.id.value}, {"name", c.name}, {"operators", members}});
  }
  Json ops = Json::array();
  for (const OperatorSpec& s : lib.ops()) {
    ops.push_back(Json{{"id", s.id.value},
                       {"name", s.name},
                       {"category", lib.category(s.category).name}});
  }
  return Json{{"operators", ops}, {"categories", cats}};
}

Json config_json(const RunConfig& cfg) {
  Json out = Json::object();
  for (const auto& [section, entries] : config_entries(cfg)) {
    Json body = Json::object();
    for (const auto& [k, v] : entries) body[k] = v;
    out[section] = std::move(body);
  }
  return out;
}

RunConfig config_from_json(const Json& echo) {
  std::ostringstream ini;
  for (const auto& [section, body] : echo.items()) {
    ini << '[' << section << "]\n";
    for (const auto& [k, v] : body.items()) ini << k << " = " << v.get<std::string>() << '\n';
  }
  return parse_config(ini.str());
}

MethodOutcome run_method(const std::string& method, const RunConfig& cfg,
                         const OperatorLibrary& lib, Evaluator& eval,
                         std::optional<std::uint64_t> budget) {
  const auto start = Clock::now();
  const SearchConfig& s = cfg.search;
  MethodOutcome out;
  out.method = method;

  auto final_eval = [&](ScoredPipeline best) {
    out.pipeline = best.pipeline;
    out.score = cfg.final_eval ? eval.evaluate(best.pipeline, Stage::Final).score : best.score;
  };

  if (method == "shapleypipe") {
    SearchResult r = run_search(lib, s, eval);
    const std::uint64_t s1 = stage1_calls(s.length, lib.n_categories(), s.n_perm);
    const std::uint64_t s2 = stage2_calls(lib, r.category_sequence, s.n_perm_refine);
    out.pipeline = r.pipeline;
    out.score = r.score;
    out.details["search"] = to_json(r, lib);
    out.details["budget"] = Json{
        {"pretrain", s.use_bandits ? s.n_pretrain : 0},
        {"stage1_formula", s1},
        {"stage2_formula", s2},
        {"final", 1},
        {"expected_total", (s.use_bandits ? s.n_pretrain : 0) + s1 + s2 + 1},
        {"two_stage_formula_average_category",
         two_stage_budget(s.length, lib.size(), lib.n_categories(), s.n_perm,
                          s.n_perm_refine)}};
  } else if (method == "random") {
    const std::uint64_t b = budget.value_or(cfg.budget);
    final_eval(random_search(lib.size(), s.length, b, eval, derive_seed(s.seed, "random"),
                             s.workers));
    out.details["budget"] = Json{{"draws", b}};
  } else if (method == "greedy") {
    final_eval(greedy_sequential(lib.size(), s.length, eval, s.workers));
    out.details["budget"] = Json{{"greedy_formula", greedy_calls(lib.size(), s.length)}};
  } else if (method == "exhaustive") {
    final_eval(exhaustive_best(lib.size(), s.length, eval, cfg.exhaustive_cap, s.workers));
    out.details["budget"] = Json{{"search_space", search_space_size(lib.size(), s.length)}};
  } else if (method == "algorithm1") {
    PositionConstructionConfig pc;
    pc.length = s.length;
    pc.n_samples = s.n_perm;
    pc.mode = cfg.suffix_mode;
    pc.seed = derive_seed(s.seed, "algorithm1");
    pc.workers = s.workers;
    pc.exhaustive_cap = cfg.exhaustive_cap;
    const PositionConstruction c = construct_by_position_shapley(lib.size(), pc, eval);
    out.pipeline = c.pipeline;
    out.score = eval.evaluate(c.pipeline, Stage::Final).score;
    Json table = Json::array();
    for (std::size_t j = 0; j < c.tables.size(); ++j) {
      for (std::size_t i = 0; i < c.tables[j].size(); ++i) {
        Json row{{"position", j + 1}, {"operator", lib.ops()[i].name}};
        row.update(estimate_json(c.tables[j][i]));
        table.push_back(std::move(row));
      }
    }
    out.details["operator_values"] = table;
  } else if (method.rfind("ablation:", 0) == 0) {
    AblationResult a = run_ablation(parse_ablation(method.substr(9)), lib, s, eval);
    out.pipeline = a.pipeline;
    out.score = a.score;
    if (!a.shared_table.empty()) {
      Json table = Json::array();
      for (std::size_t i = 0; i < a.shared_table.size(); ++i) {
        Json row{{"operator", lib.ops()[i].name}};
        row.update(estimate_json(a.shared_table[i]));
        table.push_back(std::move(row));
      }
      out.details["shared_values"] = table;
    }
    if (a.search) out.details["search"] = to_json(*a.search, lib);
  } else {
    throw Error("ConfigError", "unknown method '" + method + "'");
  }
  return finish(std::move(out), eval, start);
}

namespace {

Json dataset_json(const Dataset& ds, const SplitDataset& sp) {
  return Json{{"name", ds.name()},
              {"rows", ds.n_rows()},
              {"columns", ds.n_cols()},
              {"numeric_columns", ds.count_kind(ColumnKind::Numeric)},
              {"categorical_columns", ds.count_kind(ColumnKind::Categorical)},
              {"classes", ds.n_classes()},
              {"missing_cells", ds.missing_cells()},
              {"train_rows", sp.train.n_rows()},
              {"validation_rows", sp.validation.n_rows()},
              {"split_seed", sp.split_seed}};
}

Json outcome_json(const MethodOutcome& m, const OperatorLibrary& lib) {
  Json out{{"method", m.method},
           {"pipeline", to_json(m.pipeline, lib)},
           {"score", m.score},
           {"ledger", to_json(m.ledger)},
           {"cache_hit_rate", m.cache_hit_rate}};
  for (const auto& [k, v] : m.details.items()) out[k] = v;
  return out;
}

}  // namespace

Json run_report(const RunConfig& cfg) {
  const auto start = Clock::now();
  const OperatorLibrary lib = configured_library(cfg);
  const Dataset ds = configured_dataset(cfg);
  const SplitDataset sp = split(ds, cfg.effective_split_seed(), cfg.train_fraction);
  DatasetOracle oracle(sp, lib, cfg.learner, derive_seed(cfg.search.seed, "operators"));
  Evaluator eval(oracle);
  std::size_t preloaded = 0;
  if (!cfg.cache_path.empty() && std::filesystem::exists(cfg.cache_path)) {
    preloaded = eval.cache().load(cfg.cache_path);
  }
  const double load_seconds = seconds_since(start);

  const MethodOutcome m = run_method(cfg.method, cfg, lib, eval);
  if (!cfg.cache_path.empty()) eval.cache().save(cfg.cache_path);

  Json report;
  report["tool"] = "prepsearch";
  report["command"] = "run";
  report["method"] = cfg.method;
  report["seed"] = cfg.search.seed;
  report["config"] = config_json(cfg);
  report["dataset"] = dataset_json(ds, sp);
  report["library"] = library_json(lib);
  report["cache"] = Json{{"preloaded_entries", preloaded}, {"entries", eval.cache().size()}};
  report["result"] = outcome_json(m, lib);
  report["timings"] = Json{{"load_seconds", load_seconds},
                           {"method_seconds", m.seconds},
                           {"total_seconds", seconds_since(start)}};
  return report;
}

Json compare_report(const RunConfig& cfg) {
  if (cfg.compare_methods.size() < 2) {
    throw Error("ConfigError", "compare needs at least two methods in [compare] methods");
  }
  const auto start = Clock::now();
  const OperatorLibrary lib = configured_library(cfg);
  const Dataset ds = configured_dataset(cfg);
  const SplitDataset sp = split(ds, cfg.effective_split_seed(), cfg.train_fraction);
  DatasetOracle oracle(sp, lib, cfg.learner, derive_seed(cfg.search.seed, "operators"));

  Json rows = Json::array();
  Json details = Json::array();
  for (const std::string& spec : cfg.compare_methods) {
    const auto [method, budget] = split_method(spec);
    Evaluator eval(oracle);
    const std::string cache_file =
        cfg.cache_path.empty() ? std::string() : cache_file_for(cfg.cache_path, spec);
    if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
      eval.cache().load(cache_file);
    }
    const MethodOutcome m = run_method(method, cfg, lib, eval, budget);
    if (!cache_file.empty()) eval.cache().save(cache_file);
    rows.push_back(Json{{"method", spec},
                        {"seed", cfg.search.seed},
                        {"score", m.score},
                        {"algorithmic_calls", m.ledger.algorithmic_calls},
                        {"unique_evaluations", m.ledger.unique_evaluations},
                        {"cache_hits", m.ledger.cache_hits()},
                        {"pipeline", to_json(m.pipeline, lib)["names"]},
                        {"timings", Json{{"wall_seconds", m.seconds}}}});
    Json d = outcome_json(m, lib);
    d["method"] = spec;
    details.push_back(std::move(d));
  }

  Json report;
  report["tool"] = "prepsearch";
  report["command"] = "compare";
  report["seed"] = cfg.search.seed;
  report["config"] = config_json(cfg);
  report["dataset"] = dataset_json(ds, sp);
  report["library"] = library_json(lib);
  report["rows"] = rows;
  report["results"] = details;
  report["timings"] = Json{{"total_seconds", seconds_since(start)}};
  return report;
}

Json error_json(const std::string& code, const std::string& message) {
  return Json{{"error", Json{{"code", code}, {"message", message}}}};
}

Json strip_timings(Json report) {
  if (report.is_object()) {
    report.erase("timings");
    for (auto& [k, v] : report.items()) v = strip_timings(v);
  } else if (report.is_array()) {
    for (auto& v : report) v = strip_timings(v);
  }
  return report;
}

}  // namespace prepsearch
