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

#include "prepsearch/evaluation.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>

#include <json.hpp>

#include "prepsearch/common.hpp"

namespace prepsearch {

DatasetOracle::DatasetOracle(SplitDataset split, OperatorLibrary lib,
                             LearnerConfig cfg, std::uint64_t operator_seed)
    : split_(std::move(split)),
      lib_(std::move(lib)),
      cfg_(cfg),
      operator_seed_(operator_seed) {}

bool learner_features(const Dataset& ds, Matrix& out) {
  std::vector<const Column*> numeric;
  for (const Column& c : ds.columns()) {
    if (c.kind == ColumnKind::Numeric) numeric.push_back(&c);
  }
  if (numeric.empty()) return false;
  out = Matrix(ds.n_rows(), numeric.size());
  for (std::size_t j = 0; j < numeric.size(); ++j) {
    const auto& values = numeric[j]->numeric;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      if (!values[r]) return false;
      out(r, j) = *values[r];
    }
  }
  return true;
}

EvalOutcome DatasetOracle::score(const Pipeline& p) const {
  try {
    const TransformedSplit views = run_pipeline(p, split_, lib_, operator_seed_);
    Matrix x_train, x_val;
    if (!learner_features(views.train, x_train) ||
        !learner_features(views.validation, x_val)) {
      return {0.0, true};
    }
    const SoftmaxModel model = train_softmax(
        x_train, views.train.labels(), views.train.n_classes(), cfg_);
    return {model.accuracy(x_val, views.validation.labels()), false};
  } catch (const Error&) {
    return {0.0, true};
  }
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Pretrain: return "pretrain";
    case Stage::Stage1: return "stage1";
    case Stage::Stage2: return "stage2";
    case Stage::Final: return "final";
    case Stage::Baseline: return "baseline";
    case Stage::Other: return "other";
  }
  return "other";
}

void BudgetLedger::record(Stage s, bool miss) {
  const auto i = static_cast<std::size_t>(s);
  calls_.fetch_add(1, std::memory_order_relaxed);
  stage_calls_[i].fetch_add(1, std::memory_order_relaxed);
  if (miss) {
    unique_.fetch_add(1, std::memory_order_relaxed);
    stage_unique_[i].fetch_add(1, std::memory_order_relaxed);
  }
}

LedgerSnapshot BudgetLedger::snapshot() const {
  LedgerSnapshot s;
  s.algorithmic_calls = calls_.load();
  s.unique_evaluations = unique_.load();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    s.stage_calls[i] = stage_calls_[i].load();
    s.stage_unique[i] = stage_unique_[i].load();
  }
  return s;
}

EvalCache::Lookup EvalCache::get_or_compute(
    const std::string& key, const std::function<EvalOutcome()>& compute) {
  {
    std::shared_lock lock(mu_);
    if (auto it = table_.find(key); it != table_.end()) {
      auto fut = it->second;
      lock.unlock();
      hits_.fetch_add(1);
      return {fut.get(), true};
    }
  }
  std::promise<EvalOutcome> promise;
  {
    std::unique_lock lock(mu_);
    if (auto it = table_.find(key); it != table_.end()) {
      auto fut = it->second;
      lock.unlock();
      hits_.fetch_add(1);
      return {fut.get(), true};
    }
    table_.emplace(key, promise.get_future().share());
  }
  misses_.fetch_add(1);
  try {
    const EvalOutcome out = compute();
    promise.set_value(out);
    return {out, false};
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

double EvalCache::hit_rate() const {
  const double total = static_cast<double>(hits() + misses());
  return total > 0 ? static_cast<double>(hits()) / total : 0.0;
}

std::size_t EvalCache::size() const {
  std::shared_lock lock(mu_);
  return table_.size();
}

std::vector<std::pair<Pipeline, EvalOutcome>> EvalCache::entries() const {
  std::vector<std::pair<std::string, std::shared_future<EvalOutcome>>> copy;
  {
    std::shared_lock lock(mu_);
    copy.assign(table_.begin(), table_.end());
  }
  std::sort(copy.begin(), copy.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Pipeline, EvalOutcome>> out;
  out.reserve(copy.size());
  for (auto& [key, fut] : copy) {
    out.emplace_back(Pipeline::from_key(key), fut.get());
  }
  return out;
}

void EvalCache::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("DataError", "cannot write cache '" + path + "'");
  for (const auto& [p, o] : entries()) {
    nlohmann::ordered_json line;
    std::vector<int> ids;
    for (OperatorId id : p.slots) ids.push_back(id.value);
    line["key"] = ids;
    line["score"] = o.score;
    line["failed"] = o.failed;
    out << line.dump() << '\n';
  }
}

std::size_t EvalCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return 0;
  std::size_t loaded = 0;
  std::string line;
  std::unique_lock lock(mu_);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("DataError", "bad cache line in '" + path + "': " + e.what());
    }
    Pipeline p;
    for (int id : j.at("key").get<std::vector<int>>()) p.slots.push_back(OperatorId{id});
    std::promise<EvalOutcome> promise;
    promise.set_value({j.at("score").get<double>(), j.value("failed", false)});
    if (table_.emplace(p.key(), promise.get_future().share()).second) ++loaded;
  }
  return loaded;
}

EvalResult Evaluator::evaluate(const Pipeline& p, Stage stage) {
  const auto lookup =
      cache_.get_or_compute(p.key(), [&]() { return oracle_->score(p); });
  ledger_.record(stage, !lookup.hit);
  const bool failed = lookup.outcome.failed;
  return EvalResult{failed ? 0.0 : lookup.outcome.score, failed, lookup.hit};
}

std::vector<EvalResult> Evaluator::evaluate_batch_serial(
    std::span<const Pipeline> batch, Stage stage) {
  std::vector<EvalResult> out;
  out.reserve(batch.size());
  for (const Pipeline& p : batch) out.push_back(evaluate(p, stage));
  return out;
}

std::vector<EvalResult> Evaluator::evaluate_batch(std::span<const Pipeline> batch,
                                                  Stage stage, int workers) {
  if (workers <= 1 || batch.size() < 2) return evaluate_batch_serial(batch, stage);
  std::vector<EvalResult> out(batch.size());
  std::exception_ptr error;
  std::mutex error_mu;
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          evaluate(batch[static_cast<std::size_t>(i)], stage);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::uint64_t search_space_size(std::size_t n_ops, std::size_t length) {
  std::uint64_t total = 1;
  const std::uint64_t base = n_ops + 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= base;
  }
  return total;
}

std::vector<Pipeline> enumerate_pipelines(std::size_t n_ops, std::size_t length) {
  const std::uint64_t total = search_space_size(n_ops, length);
  std::vector<Pipeline> out;
  out.reserve(total);
  std::vector<int> digits(length, 0);
  for (std::uint64_t i = 0; i < total; ++i) {
    Pipeline p;
    p.slots.reserve(length);
    for (int d : digits) p.slots.push_back(OperatorId{d - 1});
    out.push_back(std::move(p));
    for (std::size_t pos = length; pos-- > 0;) {
      if (++digits[pos] <= static_cast<int>(n_ops)) break;
      digits[pos] = 0;
    }
  }
  return out;
}

ScoredPipeline exhaustive_best(std::size_t n_ops, std::size_t length,
                               Evaluator& eval, std::uint64_t cap, int workers) {
  const std::uint64_t total = search_space_size(n_ops, length);
  if (total > cap) {
    throw Error("SearchSpaceTooLarge",
                "exhaustive search needs " + std::to_string(total) +
                    " evaluations, cap is " + std::to_string(cap));
  }
  const std::vector<Pipeline> all = enumerate_pipelines(n_ops, length);
  const std::vector<EvalResult> scores =
      eval.evaluate_batch(all, Stage::Baseline, workers);
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (scores[i].score > scores[best].score) best = i;
  }
  return {all[best], scores[best].score};
}

}  // namespace prepsearch
