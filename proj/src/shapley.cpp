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

#include "prepsearch/shapley.hpp"

#include <bit>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "prepsearch/common.hpp"

namespace prepsearch {

CharacteristicGame::CharacteristicGame(std::size_t players,
                                       std::function<double(std::uint32_t)> v)
    : players_(players), v_(std::move(v)) {
  if (players == 0 || players > 31) {
    throw Error("TooManyPlayers", "games need 1..31 players");
  }
}

CharacteristicGame CharacteristicGame::from_table(std::vector<double> payoffs) {
  const std::size_t size = payoffs.size();
  if (size < 2 || !std::has_single_bit(size)) {
    throw Error("ConfigError", "payoff table size must be a power of two");
  }
  const auto n = static_cast<std::size_t>(std::countr_zero(size));
  return CharacteristicGame(
      n, [table = std::move(payoffs)](std::uint32_t m) { return table[m]; });
}

CharacteristicGame CharacteristicGame::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("ConfigError", std::string("bad game JSON: ") + e.what());
  }
  const auto n = j.at("players").get<std::size_t>();
  if (n == 0 || n > kMaxExactPlayers) {
    throw Error("TooManyPlayers", "game JSON supports 1..20 players");
  }
  std::vector<double> table(std::size_t{1} << n, 0.0);
  for (const auto& [mask, payoff] : j.at("values").items()) {
    const unsigned long m = std::stoul(mask);
    if (m >= table.size()) throw Error("ConfigError", "mask out of range: " + mask);
    table[m] = payoff.get<double>();
  }
  return from_table(std::move(table));
}

ShapleyEstimate summarize(std::span<const double> marginals) {
  ShapleyEstimate e;
  e.n_samples = marginals.size();
  if (marginals.empty()) return e;
  const double n = static_cast<double>(marginals.size());
  e.value = std::accumulate(marginals.begin(), marginals.end(), 0.0) / n;
  if (marginals.size() > 1) {
    double ss = 0.0;
    for (double m : marginals) ss += (m - e.value) * (m - e.value);
    e.sample_variance = ss / (n - 1.0);
  }
  return e;
}

std::vector<double> exact_shapley(const CharacteristicGame& game) {
  const std::size_t n = game.players();
  if (n > kMaxExactPlayers) {
    throw Error("TooManyPlayers", "exact Shapley supports at most 20 players");
  }
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  std::vector<double> v(std::size_t{full} + 1);
  for (std::uint32_t m = 0; m <= full; ++m) v[m] = game.value(m);
  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    double w = 1.0 / static_cast<double>(n);
    // s! (n-1-s)! / (n-1)! = 1 / C(n-1, s)
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) {
      binom = binom * static_cast<double>(n - 1 - s + k) / static_cast<double>(k);
    }
    weight[s] = w / binom;
  }
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      phi[i] += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

std::vector<ShapleyEstimate> permutation_shapley(const CharacteristicGame& game,
                                                 std::size_t n_perm,
                                                 std::uint64_t seed) {
  if (n_perm == 0) throw Error("ConfigError", "n_perm must be positive");
  const std::size_t n = game.players();
  std::vector<std::vector<double>> marginals(n);
  for (auto& m : marginals) m.reserve(n_perm);
  std::vector<std::size_t> order(n);
  for (std::size_t t = 0; t < n_perm; ++t) {
    Rng rng(derive_seed(seed, "permutation", t));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    std::uint32_t coalition = 0;
    double before = 0.0;
    for (std::size_t player : order) {
      coalition |= std::uint32_t{1} << player;
      const double after = game.value(coalition);
      marginals[player].push_back(after - before);
      before = after;
    }
  }
  std::vector<ShapleyEstimate> out;
  out.reserve(n);
  for (const auto& m : marginals) out.push_back(summarize(m));
  return out;
}

std::vector<OperatorId> UniformSuffixSampler::sample(std::size_t index) const {
  Rng rng(derive_seed(seed_, "suffix", index));
  std::vector<OperatorId> out(length_);
  for (auto& slot : out) {
    slot = OperatorId{static_cast<int>(uniform_index(rng, n_ops_ + 1)) - 1};
  }
  return out;
}

std::vector<OperatorId> ConstrainedSuffixSampler::sample(std::size_t index) const {
  Rng rng(derive_seed(seed_, "constrained-suffix", index));
  std::vector<OperatorId> out(categories_.size(), kNullOp);
  for (std::size_t k = 0; k < categories_.size(); ++k) {
    if (categories_[k].is_null()) continue;
    const auto& members = lib_->category(categories_[k]).members;
    out[k] = members[uniform_index(rng, members.size())];
  }
  return out;
}

std::vector<std::vector<OperatorId>> enumerate_suffixes(std::size_t n_ops,
                                                        std::size_t length) {
  std::vector<std::vector<OperatorId>> out;
  for (Pipeline& p : enumerate_pipelines(n_ops, length)) {
    out.push_back(std::move(p.slots));
  }
  return out;
}

Pipeline compose(std::span<const OperatorId> prefix, OperatorId slot,
                 std::span<const OperatorId> suffix) {
  Pipeline p;
  p.slots.reserve(prefix.size() + 1 + suffix.size());
  p.slots.insert(p.slots.end(), prefix.begin(), prefix.end());
  p.slots.push_back(slot);
  p.slots.insert(p.slots.end(), suffix.begin(), suffix.end());
  return p;
}

std::vector<ShapleyEstimate> estimate_position_values(
    const std::vector<OperatorId>& prefix, std::span<const OperatorId> candidates,
    std::span<const std::vector<OperatorId>> suffixes, Evaluator& eval,
    Stage stage, int workers) {
  std::vector<Pipeline> batch;
  batch.reserve(2 * candidates.size() * suffixes.size());
  for (OperatorId c : candidates) {
    for (const auto& q : suffixes) {
      batch.push_back(compose(prefix, c, q));
      batch.push_back(compose(prefix, kNullOp, q));
    }
  }
  const std::vector<EvalResult> results = eval.evaluate_batch(batch, stage, workers);
  std::vector<ShapleyEstimate> out;
  out.reserve(candidates.size());
  std::vector<double> marginals(suffixes.size());
  std::size_t k = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t s = 0; s < suffixes.size(); ++s, k += 2) {
      marginals[s] = results[k].score - results[k + 1].score;
    }
    out.push_back(summarize(marginals));
  }
  return out;
}

namespace {

void check_context(const PositionContext& ctx, OperatorId candidate) {
  if (candidate.is_null()) {
    throw Error("ConfigError", "candidate operator must not be NULL");
  }
  if (ctx.position() > ctx.length) {
    throw Error("ConfigError", "prefix is as long as the pipeline");
  }
}

}  // namespace

ShapleyEstimate conditional_position_shapley(
    const PositionContext& ctx, OperatorId candidate,
    std::span<const std::vector<OperatorId>> suffixes, Evaluator& eval,
    Stage stage, int workers) {
  check_context(ctx, candidate);
  if (suffixes.empty()) throw Error("ConfigError", "no suffixes to average over");
  for (const auto& q : suffixes) {
    if (q.size() != ctx.suffix_length()) {
      throw Error("ConfigError", "suffix length does not match the context");
    }
  }
  const OperatorId one[] = {candidate};
  return estimate_position_values(ctx.prefix, one, suffixes, eval, stage, workers)[0];
}

ShapleyEstimate conditional_position_shapley(const PositionContext& ctx,
                                             OperatorId candidate,
                                             const SuffixSampler& sampler,
                                             std::size_t n_samples,
                                             Evaluator& eval, Stage stage,
                                             int workers) {
  if (n_samples == 0) throw Error("ConfigError", "n_samples must be positive");
  std::vector<std::vector<OperatorId>> suffixes;
  suffixes.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) suffixes.push_back(sampler.sample(i));
  return conditional_position_shapley(ctx, candidate, suffixes, eval, stage, workers);
}

std::uint64_t exhaustive_construction_calls(std::size_t n_ops, std::size_t length) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  for (std::size_t j = 1; j <= length; ++j) {
    const std::uint64_t suffixes = search_space_size(n_ops, length - j);
    if (suffixes == kMax || suffixes > kMax / (2 * std::max<std::size_t>(n_ops, 1))) {
      return kMax;
    }
    const std::uint64_t term = 2 * n_ops * suffixes;
    if (total > kMax - term) return kMax;
    total += term;
  }
  return total;
}

int select_best(std::span<const double> values, bool allow_null) {
  int best = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  if (allow_null && (best < 0 || values[static_cast<std::size_t>(best)] <= 0.0)) {
    return -1;
  }
  return best;
}

PositionConstruction construct_by_position_shapley(
    std::size_t n_ops, const PositionConstructionConfig& cfg, Evaluator& eval) {
  if (cfg.length == 0 || n_ops == 0) {
    throw Error("ConfigError", "need at least one position and one operator");
  }
  if (cfg.mode == SuffixMode::Exhaustive) {
    const std::uint64_t calls = exhaustive_construction_calls(n_ops, cfg.length);
    if (calls > cfg.exhaustive_cap) {
      throw Error("SearchSpaceTooLarge",
                  "exhaustive suffix enumeration needs " + std::to_string(calls) +
                      " evaluations, cap is " + std::to_string(cfg.exhaustive_cap));
    }
  } else if (cfg.n_samples == 0) {
    throw Error("ConfigError", "n_samples must be positive");
  }

  std::vector<OperatorId> candidates;
  for (std::size_t i = 0; i < n_ops; ++i) candidates.push_back(OperatorId{static_cast<int>(i)});

  PositionConstruction out;
  std::vector<OperatorId> prefix;
  for (std::size_t j = 1; j <= cfg.length; ++j) {
    const std::size_t suffix_len = cfg.length - j;
    std::vector<std::vector<OperatorId>> suffixes;
    if (cfg.mode == SuffixMode::Exhaustive) {
      suffixes = enumerate_suffixes(n_ops, suffix_len);
    } else {
      UniformSuffixSampler sampler(n_ops, suffix_len,
                                   derive_seed(cfg.seed, "position-construction", j));
      for (std::size_t i = 0; i < cfg.n_samples; ++i) suffixes.push_back(sampler.sample(i));
    }
    auto table =
        estimate_position_values(prefix, candidates, suffixes, eval, cfg.stage, cfg.workers);
    std::vector<double> values;
    for (const auto& e : table) values.push_back(e.value);
    const int best = select_best(values, cfg.allow_null);
    prefix.push_back(best < 0 ? kNullOp : candidates[static_cast<std::size_t>(best)]);
    out.tables.push_back(std::move(table));
  }
  out.pipeline = Pipeline(std::move(prefix));
  return out;
}

}  // namespace prepsearch
