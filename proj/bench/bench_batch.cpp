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

// Times the serial reference loop against the OpenMP batch evaluator on the
// same pipelines, each with a cold cache, and checks that scores agree.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "prepsearch/config.hpp"
#include "prepsearch/evaluation.hpp"
#include "prepsearch/operators.hpp"

using namespace prepsearch;

int main(int argc, char** argv) {
  const std::size_t length = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2;
  const int workers = argc > 2 ? std::atoi(argv[2]) : default_workers();
  const OperatorLibrary lib = builtin_library();
  const Dataset ds = synth_dataset(SynthSpec{});
  DatasetOracle oracle(split(ds, 0, 0.8), lib, LearnerConfig{}, 0);
  const std::vector<Pipeline> batch = enumerate_pipelines(lib.size(), length);

  using Clock = std::chrono::steady_clock;
  Evaluator serial_eval(oracle);
  const auto t0 = Clock::now();
  const auto serial = serial_eval.evaluate_batch_serial(batch, Stage::Other);
  const auto t1 = Clock::now();
  Evaluator parallel_eval(oracle);
  const auto parallel = parallel_eval.evaluate_batch(batch, Stage::Other, workers);
  const auto t2 = Clock::now();

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (serial[i].score != parallel[i].score) ++mismatches;
  }
  const double ts = std::chrono::duration<double>(t1 - t0).count();
  const double tp = std::chrono::duration<double>(t2 - t1).count();
  std::printf("pipelines %zu, workers %d\n", batch.size(), workers);
  std::printf("serial   %.3fs\nparallel %.3fs\nspeedup  %.2fx\nmismatches %zu\n", ts, tp,
              ts / tp, mismatches);
  return mismatches == 0 ? 0 : 1;
}
