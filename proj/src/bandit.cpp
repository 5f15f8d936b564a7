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

#include "prepsearch/bandit.hpp"

#include <algorithm>
#include <limits>

#include "prepsearch/common.hpp"

namespace prepsearch {

BanditState::BanditState(CategoryId category, std::vector<OperatorId> arms,
                         double exploration)
    : category_(category), exploration_(exploration) {
  std::sort(arms.begin(), arms.end());
  for (OperatorId op : arms) arms_.push_back(ArmStats{op, 0, 0.0});
}

std::size_t BanditState::index_of(OperatorId op) const {
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    if (arms_[i].op == op) return i;
  }
  throw Error("UnknownArm", "operator " + std::to_string(op.value) +
                                " is not an arm of category " +
                                std::to_string(category_.value));
}

const ArmStats& BanditState::arm(OperatorId op) const { return arms_[index_of(op)]; }

double BanditState::ucb_index(std::size_t i) const {
  const ArmStats& a = arms_[i];
  if (a.pulls == 0) return std::numeric_limits<double>::infinity();
  const double log_t = std::log(static_cast<double>(total_));
  return a.mean + exploration_ * std::sqrt(log_t / static_cast<double>(a.pulls));
}

OperatorId BanditState::select() const {
  if (arms_.empty()) {
    throw Error("EmptyCategory",
                "category " + std::to_string(category_.value) + " has no operators");
  }
  for (const ArmStats& a : arms_) {
    if (a.pulls == 0) return a.op;
  }
  std::size_t best = 0;
  double best_index = ucb_index(0);
  for (std::size_t i = 1; i < arms_.size(); ++i) {
    const double v = ucb_index(i);
    if (v > best_index) {
      best = i;
      best_index = v;
    }
  }
  return arms_[best].op;
}

void BanditState::update(OperatorId op, double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) {
    throw Error("InvalidReward", "bandit rewards must lie in [0, 1]");
  }
  ArmStats& a = arms_[index_of(op)];
  ++a.pulls;
  a.mean += (reward - a.mean) / static_cast<double>(a.pulls);
  ++total_;
}

OperatorId BanditState::best_mean_arm() const {
  if (arms_.empty()) {
    throw Error("EmptyCategory",
                "category " + std::to_string(category_.value) + " has no operators");
  }
  const ArmStats* best = nullptr;
  for (const ArmStats& a : arms_) {
    if (a.pulls == 0) continue;
    if (!best || a.mean > best->mean) best = &a;
  }
  return best ? best->op : arms_.front().op;
}

std::vector<BanditState> make_bandits(const OperatorLibrary& lib, double exploration) {
  std::vector<BanditState> out;
  for (const Category& c : lib.categories()) {
    out.emplace_back(c.id, c.members, exploration);
  }
  return out;
}

void pretrain(std::vector<BanditState>& bandits, const OperatorLibrary& lib,
              std::size_t length, std::size_t n_pretrain, Evaluator& eval,
              std::uint64_t seed, int workers) {
  if (n_pretrain == 0) return;
  std::vector<Pipeline> batch;
  batch.reserve(n_pretrain);
  for (std::size_t i = 0; i < n_pretrain; ++i) {
    Rng rng(derive_seed(seed, "pretrain", i));
    Pipeline p;
    for (std::size_t j = 0; j < length; ++j) {
      p.slots.push_back(OperatorId{static_cast<int>(uniform_index(rng, lib.size() + 1)) - 1});
    }
    batch.push_back(std::move(p));
  }
  const auto results = eval.evaluate_batch(batch, Stage::Pretrain, workers);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (OperatorId op : batch[i].slots) {
      if (op.is_null()) continue;
      bandits[static_cast<std::size_t>(lib.category_of(op).value)].update(
          op, results[i].score);
    }
  }
}

double RegretTrace::share(std::size_t arm, std::size_t from, std::size_t to) const {
  to = std::min(to, arms.size());
  if (from >= to) return 0.0;
  const auto hits = std::count(arms.begin() + static_cast<long>(from),
                               arms.begin() + static_cast<long>(to), arm);
  return static_cast<double>(hits) / static_cast<double>(to - from);
}

RegretTrace simulate_bernoulli(std::span<const double> means, std::size_t horizon,
                               std::uint64_t seed, double exploration) {
  std::vector<OperatorId> ids;
  for (std::size_t i = 0; i < means.size(); ++i) ids.push_back(OperatorId{static_cast<int>(i)});
  BanditState state(CategoryId{0}, ids, exploration);
  const double best = *std::max_element(means.begin(), means.end());
  Rng rng(derive_seed(seed, "bernoulli-bandit"));
  RegretTrace trace;
  double regret = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto arm = static_cast<std::size_t>(state.select().value);
    const double reward = uniform_unit(rng) < means[arm] ? 1.0 : 0.0;
    state.update(OperatorId{static_cast<int>(arm)}, reward);
    regret += best - means[arm];
    trace.arms.push_back(arm);
    trace.rewards.push_back(reward);
    trace.cumulative_regret.push_back(regret);
  }
  return trace;
}

}  // namespace prepsearch
