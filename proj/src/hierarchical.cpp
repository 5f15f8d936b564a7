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

#include "prepsearch/hierarchical.hpp"

#include <algorithm>

#include "prepsearch/common.hpp"

namespace prepsearch {

std::uint64_t stage1_calls(std::size_t length, std::size_t n_categories,
                           std::size_t n_perm) {
  return 2ULL * length * n_categories * n_perm;
}

std::uint64_t stage2_calls(const OperatorLibrary& lib, const CategorySequence& seq,
                           std::size_t n_perm_refine) {
  std::uint64_t members = 0;
  for (CategoryId c : seq) {
    if (!c.is_null()) members += lib.category(c).members.size();
  }
  return 2ULL * n_perm_refine * members;
}

double two_stage_budget(std::size_t length, std::size_t n_ops,
                        std::size_t n_categories, std::size_t n_perm,
                        std::size_t n_perm_refine) {
  const double avg_size = static_cast<double>(n_ops) / static_cast<double>(n_categories);
  return 2.0 * static_cast<double>(length * n_categories * n_perm) +
         2.0 * static_cast<double>(length) * avg_size * static_cast<double>(n_perm_refine);
}

namespace {

BanditState& bandit_for(std::vector<BanditState>& bandits, CategoryId c) {
  return bandits[static_cast<std::size_t>(c.value)];
}

// Counts a pull without changing the arm's mean, so later selections in the
// same batch see it as explored.
void pending_pull(BanditState& b, OperatorId op) {
  b.update(op, b.arm(op).mean);
}

OperatorId uniform_member(const OperatorLibrary& lib, CategoryId c, Rng& rng) {
  const auto& members = lib.category(c).members;
  return members[uniform_index(rng, members.size())];
}

void check_config(const OperatorLibrary& lib, const SearchConfig& cfg) {
  if (cfg.length == 0 || cfg.n_perm == 0 || cfg.n_perm_refine == 0 ||
      cfg.bandit_batch == 0) {
    throw Error("ConfigError",
                "length, n_perm, n_perm_refine and bandit_batch must be positive");
  }
  for (const Category& c : lib.categories()) {
    if (c.members.empty()) {
      throw Error("EmptyCategory", "category '" + c.name + "' has no operators");
    }
  }
}

}  // namespace

ShapleyEstimate category_shapley(const OperatorLibrary& lib,
                                 std::span<const OperatorId> prefix_ops,
                                 std::span<const CategoryId> prefix_categories,
                                 CategoryId candidate, const SearchConfig& cfg,
                                 std::vector<BanditState>& bandits,
                                 Evaluator& eval) {
  const std::size_t position = prefix_ops.size() + 1;
  if (position > cfg.length) throw Error("ConfigError", "prefix fills the pipeline");
  if (candidate.is_null()) throw Error("ConfigError", "candidate category is NULL");
  if (cfg.reselect_prefix && prefix_categories.size() != prefix_ops.size()) {
    throw Error("ConfigError", "prefix categories and operators differ in length");
  }
  const std::size_t suffix_len = cfg.length - position;
  const std::size_t n_categories = lib.n_categories();
  const auto cand = static_cast<std::uint64_t>(candidate.value);

  struct Draw {
    std::vector<OperatorId> prefix;
    OperatorId rep;
    std::vector<CategoryId> categories;
    std::vector<OperatorId> ops;
  };

  std::vector<double> marginals;
  marginals.reserve(cfg.n_perm);
  for (std::size_t start = 0; start < cfg.n_perm; start += cfg.bandit_batch) {
    const std::size_t end = std::min(cfg.n_perm, start + cfg.bandit_batch);
    std::vector<BanditState> working;
    if (cfg.use_bandits) working = bandits;

    std::vector<Draw> draws;
    std::vector<Pipeline> batch;
    for (std::size_t i = start; i < end; ++i) {
      Draw d;
      // The category suffix depends on (position, sample) only, so every
      // candidate category is compared on the same suffixes.
      Rng rng(derive_seed(cfg.seed, "stage1-suffix", position, i));
      for (std::size_t k = 0; k < suffix_len; ++k) {
        const auto pick = static_cast<int>(uniform_index(rng, n_categories + 1));
        d.categories.push_back(CategoryId{pick - 1});
      }
      if (cfg.use_bandits) {
        if (cfg.reselect_prefix) {
          for (CategoryId c : prefix_categories) {
            d.prefix.push_back(c.is_null() ? kNullOp : bandit_for(working, c).select());
          }
        } else {
          d.prefix.assign(prefix_ops.begin(), prefix_ops.end());
        }
        d.rep = bandit_for(working, candidate).select();
        for (CategoryId c : d.categories) {
          d.ops.push_back(c.is_null() ? kNullOp : bandit_for(working, c).select());
        }
        pending_pull(bandit_for(working, candidate), d.rep);
        for (std::size_t k = 0; k < suffix_len; ++k) {
          if (!d.ops[k].is_null()) pending_pull(bandit_for(working, d.categories[k]), d.ops[k]);
        }
      } else {
        Rng rep_rng(derive_seed(cfg.seed, "stage1-uniform-rep", position, cand, i));
        d.prefix.assign(prefix_ops.begin(), prefix_ops.end());
        d.rep = uniform_member(lib, candidate, rep_rng);
        for (CategoryId c : d.categories) {
          d.ops.push_back(c.is_null() ? kNullOp : uniform_member(lib, c, rep_rng));
        }
      }
      batch.push_back(compose(d.prefix, d.rep, d.ops));
      batch.push_back(compose(d.prefix, kNullOp, d.ops));
      draws.push_back(std::move(d));
    }

    const auto results = eval.evaluate_batch(batch, Stage::Stage1, cfg.workers);
    for (std::size_t s = 0; s < draws.size(); ++s) {
      const double with = results[2 * s].score;
      marginals.push_back(with - results[2 * s + 1].score);
      if (!cfg.use_bandits) continue;
      const Draw& d = draws[s];
      bandit_for(bandits, candidate).update(d.rep, with);
      for (std::size_t k = 0; k < suffix_len; ++k) {
        if (!d.ops[k].is_null()) bandit_for(bandits, d.categories[k]).update(d.ops[k], with);
      }
    }
  }
  return summarize(marginals);
}

Stage1Result stage1_search(const OperatorLibrary& lib, const SearchConfig& cfg,
                           std::vector<BanditState>& bandits, Evaluator& eval) {
  check_config(lib, cfg);
  Stage1Result out;
  for (std::size_t j = 1; j <= cfg.length; ++j) {
    std::vector<ShapleyEstimate> row;
    std::vector<double> values;
    for (const Category& c : lib.categories()) {
      row.push_back(category_shapley(lib, out.representatives, out.sequence, c.id,
                                     cfg, bandits, eval));
      values.push_back(row.back().value);
    }
    // NULL's marginal against NULL is identically 0, so it wins exactly when
    // no category is positive.
    const int best = select_best(values, cfg.allow_null_category);
    if (best < 0) {
      out.sequence.push_back(CategoryId::null());
      out.representatives.push_back(kNullOp);
    } else {
      const CategoryId chosen{best};
      out.sequence.push_back(chosen);
      if (cfg.use_bandits) {
        out.representatives.push_back(bandit_for(bandits, chosen).best_mean_arm());
      } else {
        Rng rng(derive_seed(cfg.seed, "stage1-freeze", j));
        out.representatives.push_back(uniform_member(lib, chosen, rng));
      }
    }
    out.table.push_back(std::move(row));
  }
  return out;
}

Stage2Result stage2_refine(const OperatorLibrary& lib, const CategorySequence& seq,
                           const SearchConfig& cfg, Evaluator& eval) {
  if (cfg.n_perm_refine == 0) throw Error("ConfigError", "n_perm_refine must be positive");
  Stage2Result out;
  std::vector<OperatorId> prefix;
  for (std::size_t j = 1; j <= seq.size(); ++j) {
    const CategoryId c = seq[j - 1];
    if (c.is_null()) {
      prefix.push_back(kNullOp);
      continue;
    }
    const std::vector<OperatorId>& candidates = lib.category(c).members;
    ConstrainedSuffixSampler sampler(
        lib, CategorySequence(seq.begin() + static_cast<long>(j), seq.end()),
        derive_seed(cfg.seed, "stage2", j));
    std::vector<std::vector<OperatorId>> suffixes;
    suffixes.reserve(cfg.n_perm_refine);
    for (std::size_t i = 0; i < cfg.n_perm_refine; ++i) suffixes.push_back(sampler.sample(i));
    const auto estimates = estimate_position_values(prefix, candidates, suffixes, eval,
                                                    Stage::Stage2, cfg.workers);
    std::vector<double> values;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      out.table.push_back(OperatorValue{j, candidates[i], estimates[i]});
      values.push_back(estimates[i].value);
    }
    prefix.push_back(candidates[static_cast<std::size_t>(select_best(values, false))]);
  }
  out.pipeline = Pipeline(std::move(prefix));
  return out;
}

SearchResult run_search(const OperatorLibrary& lib, const SearchConfig& cfg,
                        Evaluator& eval) {
  check_config(lib, cfg);
  SearchResult out;
  std::vector<BanditState> bandits = make_bandits(lib, cfg.exploration);
  if (cfg.use_bandits) {
    pretrain(bandits, lib, cfg.length, cfg.n_pretrain, eval,
             derive_seed(cfg.seed, "pretrain"), cfg.workers);
  }
  Stage1Result s1 = stage1_search(lib, cfg, bandits, eval);
  Stage2Result s2 = stage2_refine(lib, s1.sequence, cfg, eval);
  const EvalResult final_eval = eval.evaluate(s2.pipeline, Stage::Final);

  out.pipeline = std::move(s2.pipeline);
  out.category_sequence = std::move(s1.sequence);
  out.score = final_eval.score;
  out.category_table = std::move(s1.table);
  out.operator_table = std::move(s2.table);
  out.stage1_representatives = std::move(s1.representatives);
  out.ledger = eval.ledger();
  out.bandits = std::move(bandits);
  out.cache_hit_rate = eval.cache().hit_rate();
  return out;
}

SearchResult search(const Dataset& ds, const OperatorLibrary& lib,
                    const SearchConfig& cfg, const DataSettings& data) {
  ds.validate_source();
  DatasetOracle oracle(split(ds, data.split_seed, data.train_fraction), lib,
                       data.learner, derive_seed(cfg.seed, "operators"));
  Evaluator eval(oracle);
  return run_search(lib, cfg, eval);
}

}  // namespace prepsearch
