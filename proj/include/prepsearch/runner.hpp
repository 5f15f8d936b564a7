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

// Method dispatch and JSON reports for configured runs. Report keys keep a
// fixed order; everything except the "timings" object is a pure function
// of the configuration.

#ifndef PREPSEARCH_RUNNER_HPP
#define PREPSEARCH_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "prepsearch/baselines.hpp"
#include "prepsearch/config.hpp"
#include "prepsearch/evaluation.hpp"
#include "prepsearch/hierarchical.hpp"
#include "prepsearch/operators.hpp"

namespace prepsearch {

using Json = nlohmann::ordered_json;

/// Library selected by cfg.operators (built-in library when empty).
OperatorLibrary configured_library(const RunConfig& cfg);
/// CSV or synthetic dataset named by the config.
Dataset configured_dataset(const RunConfig& cfg);

struct MethodOutcome {
  std::string method;
  Pipeline pipeline;
  double score = 0.0;
  LedgerSnapshot ledger;
  double cache_hit_rate = 0.0;
  double seconds = 0.0;
  /// Method-specific tables (search record, value tables, budgets).
  Json details = Json::object();
};

/// Runs `method` (see RunConfig::method) against `eval`. `budget`
/// overrides cfg.budget for random search.
MethodOutcome run_method(const std::string& method, const RunConfig& cfg,
                         const OperatorLibrary& lib, Evaluator& eval,
                         std::optional<std::uint64_t> budget = std::nullopt);

Json to_json(const LedgerSnapshot& ledger);
Json to_json(const Pipeline& p, const OperatorLibrary& lib);
Json to_json(const SearchResult& r, const OperatorLibrary& lib);
Json library_json(const OperatorLibrary& lib);
Json config_json(const RunConfig& cfg);

/// Rebuilds a configuration from a report's "config" object.
RunConfig config_from_json(const Json& echo);

/// Loads data, runs cfg.method, and returns the report. Uses and refreshes
/// cfg.cache_path when set.
Json run_report(const RunConfig& cfg);

/// Runs every method of cfg.compare_methods (at least two) on one split,
/// each with its own evaluator and cache.
Json compare_report(const RunConfig& cfg);

/// {"error": {"code": ..., "message": ...}}
Json error_json(const std::string& code, const std::string& message);

/// Copy of `report` without its "timings" members, at any depth.
Json strip_timings(Json report);

}  // namespace prepsearch

#endif  // PREPSEARCH_RUNNER_HPP
