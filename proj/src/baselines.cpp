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

#include "prepsearch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prepsearch/common.hpp"

namespace prepsearch {

ScoredPipeline random_search(std::size_t n_ops, std::size_t length,
                             std::uint64_t budget, Evaluator& eval,
                             std::uint64_t seed, int workers) {
  if (budget == 0) throw Error("ConfigError", "random search budget must be positive");
  if (length == 0) throw Error("ConfigError", "pipeline length must be positive");
  std::vector<Pipeline> draws;
  draws.reserve(budget);
  for (std::uint64_t i = 0; i < budget; ++i) {
    Rng rng(derive_seed(seed, "random-search", i));
    Pipeline p;
    for (std::size_t j = 0; j < length; ++j) {
      p.slots.push_back(OperatorId{static_cast<int>(uniform_index(rng, n_ops + 1)) - 1});
    }
    draws.push_back(std::move(p));
  }
  const auto results = eval.evaluate_batch(draws, Stage::Baseline, workers);
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].score > results[best].score) best = i;
  }
  return ScoredPipeline{draws[best], results[best].score};
}

std::uint64_t greedy_calls(std::size_t n_ops, std::size_t length) {
  return static_cast<std::uint64_t>(length) * (n_ops + 1);
}

ScoredPipeline greedy_sequential(std::size_t n_ops, std::size_t length,
                                 Evaluator& eval, int workers) {
  if (length == 0) throw Error("ConfigError", "pipeline length must be positive");
  Pipeline current = Pipeline::all_null(length);
  double score = 0.0;
  for (std::size_t j = 0; j < length; ++j) {
    std::vector<Pipeline> batch;
    for (int c = -1; c < static_cast<int>(n_ops); ++c) {
      Pipeline p = current;
      p.slots[j] = OperatorId{c};
      batch.push_back(std::move(p));
    }
    const auto results = eval.evaluate_batch(batch, Stage::Baseline, workers);
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
      if (results[i].score > results[best].score) best = i;
    }
    current = batch[best];
    score = results[best].score;
  }
  return ScoredPipeline{current, score};
}

Ablation parse_ablation(const std::string& name) {
  if (name == "position_agnostic") return Ablation::PositionAgnostic;
  if (name == "category_only") return Ablation::CategoryOnly;
  if (name == "random_sampling") return Ablation::RandomSampling;
  if (name == "no_mab") return Ablation::NoBandits;
  throw Error("UnknownVariant", "unknown ablation variant '" + name + "'");
}

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::PositionAgnostic: return "position_agnostic";
    case Ablation::CategoryOnly: return "category_only";
    case Ablation::RandomSampling: return "random_sampling";
    case Ablation::NoBandits: return "no_mab";
  }
  return "?";
}

namespace {

AblationResult position_agnostic(const OperatorLibrary& lib, const SearchConfig& cfg,
                                 Evaluator& eval) {
  AblationResult out;
  out.variant = Ablation::PositionAgnostic;
  UniformSuffixSampler sampler(lib.size(), cfg.length - 1,
                               derive_seed(cfg.seed, "position-agnostic"));
  std::vector<std::vector<OperatorId>> suffixes;
  for (std::size_t i = 0; i < cfg.n_perm; ++i) suffixes.push_back(sampler.sample(i));
  std::vector<OperatorId> candidates;
  for (const OperatorSpec& s : lib.ops()) candidates.push_back(s.id);
  out.shared_table = estimate_position_values({}, candidates, suffixes, eval,
                                              Stage::Baseline, cfg.workers);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.shared_table[a].value > out.shared_table[b].value;
  });
  Pipeline p = Pipeline::all_null(cfg.length);
  for (std::size_t j = 0; j < cfg.length && j < order.size(); ++j) {
    if (out.shared_table[order[j]].value > 0.0) p.slots[j] = candidates[order[j]];
  }
  out.pipeline = std::move(p);
  out.score = eval.evaluate(out.pipeline, Stage::Final).score;
  return out;
}

AblationResult category_only(const OperatorLibrary& lib, const SearchConfig& cfg,
                             Evaluator& eval) {
  AblationResult out;
  out.variant = Ablation::CategoryOnly;
  std::vector<BanditState> bandits = make_bandits(lib, cfg.exploration);
  if (cfg.use_bandits) {
    pretrain(bandits, lib, cfg.length, cfg.n_pretrain, eval,
             derive_seed(cfg.seed, "pretrain"), cfg.workers);
  }
  Stage1Result s1 = stage1_search(lib, cfg, bandits, eval);
  out.pipeline = Pipeline(s1.representatives);
  out.score = eval.evaluate(out.pipeline, Stage::Final).score;

  SearchResult record;
  record.pipeline = out.pipeline;
  record.category_sequence = std::move(s1.sequence);
  record.score = out.score;
  record.category_table = std::move(s1.table);
  record.stage1_representatives = std::move(s1.representatives);
  record.ledger = eval.ledger();
  record.bandits = std::move(bandits);
  record.cache_hit_rate = eval.cache().hit_rate();
  out.search = std::move(record);
  return out;
}

}  // namespace

AblationResult run_ablation(Ablation variant, const OperatorLibrary& lib,
                            const SearchConfig& cfg, Evaluator& eval) {
  if (cfg.length == 0 || cfg.n_perm == 0) {
    throw Error("ConfigError", "length and n_perm must be positive");
  }
  switch (variant) {
    case Ablation::PositionAgnostic:
      return position_agnostic(lib, cfg, eval);
    case Ablation::CategoryOnly:
      return category_only(lib, cfg, eval);
    case Ablation::RandomSampling: {
      const auto budget = static_cast<std::uint64_t>(std::llround(two_stage_budget(
          cfg.length, lib.size(), lib.n_categories(), cfg.n_perm, cfg.n_perm_refine)));
      const ScoredPipeline best =
          random_search(lib.size(), cfg.length, std::max<std::uint64_t>(budget, 1), eval,
                        derive_seed(cfg.seed, "random-sampling"), cfg.workers);
      AblationResult out;
      out.variant = variant;
      out.pipeline = best.pipeline;
      out.score = best.score;
      return out;
    }
    case Ablation::NoBandits: {
      SearchConfig no_mab = cfg;
      no_mab.use_bandits = false;
      AblationResult out;
      out.variant = variant;
      SearchResult r = run_search(lib, no_mab, eval);
      out.pipeline = r.pipeline;
      out.score = r.score;
      out.search = std::move(r);
      return out;
    }
  }
  throw Error("UnknownVariant", "unknown ablation variant");
}

}  // namespace prepsearch
