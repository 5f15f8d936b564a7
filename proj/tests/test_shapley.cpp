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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "prepsearch/common.hpp"
#include "prepsearch/evaluation.hpp"
#include "prepsearch/shapley.hpp"
#include "test_util.hpp"

using namespace prepsearch;
using prepsearch::testing::error_code;
using prepsearch::testing::pipe;
using prepsearch::testing::pipeline_code;

namespace {

/// Shapley values by averaging marginals over every arrival order.
std::vector<double> all_orderings_shapley(const CharacteristicGame& g) {
  const std::size_t n = g.players();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0;
  do {
    std::uint32_t s = 0;
    for (int i : order) {
      phi[static_cast<std::size_t>(i)] += g.value(s | (1U << i)) - g.value(s);
      s |= 1U << i;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : phi) p /= count;
  return phi;
}

CharacteristicGame example_game() {
  // Players A=0, B=1, C=2.
  std::vector<double> t(8, 0.0);
  t[0b011] = 50;
  t[0b101] = 30;
  t[0b110] = 40;
  t[0b111] = 80;
  return CharacteristicGame::from_table(t);
}

CharacteristicGame random_game(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-game"));
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = uniform_unit(rng) * 10.0;
  return CharacteristicGame::from_table(t);
}

/// Payoff of a pipeline over 4 operators; nonlinear and order dependent.
double toy_payoff(const Pipeline& p) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const int v = p[j].value;
    if (v < 0) continue;
    s += std::sin(1.7 * (v + 1) + 0.9 * static_cast<double>(j)) * 0.2;
    if (j > 0 && p[j - 1].value == (v + 1) % 4) s += 0.15;
  }
  return 0.5 + s;
}

}  // namespace

TEST_CASE("exact: worked three-player example") {
  const auto phi = exact_shapley(example_game());
  const auto oracle = all_orderings_shapley(example_game());
  CHECK(std::abs(phi[0] - 26.67) < 0.01);
  // The source example prints 28.33 and 25 for B and C; direct evaluation
  // gives 31.67 and 21.67. Both triples sum to 80.
  CHECK(std::abs(phi[1] - oracle[1]) < 1e-9);
  CHECK(std::abs(phi[2] - oracle[2]) < 1e-9);
  CHECK(std::abs(phi[1] - 95.0 / 3.0) < 1e-9);
  CHECK(std::abs(phi[2] - 65.0 / 3.0) < 1e-9);
  CHECK(std::abs(phi[0] + phi[1] + phi[2] - 80.0) < 1e-9);
}

TEST_CASE("exact: symmetric two-player game splits evenly") {
  const auto phi = exact_shapley(CharacteristicGame::from_table({0, 0, 0, 10}));
  CHECK(phi[0] == doctest::Approx(5.0));
  CHECK(phi[1] == doctest::Approx(5.0));
}

TEST_CASE("exact property: efficiency and agreement with the orderings oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1 + seed % 7;  // 1..7 players
    const CharacteristicGame g = random_game(n, seed);
    const auto phi = exact_shapley(g);
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(std::abs(total - g.value((1U << n) - 1)) < 1e-9);
    if (n <= 6) {
      const auto oracle = all_orderings_shapley(g);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(phi[i] - oracle[i]) < 1e-9);
    }
  }
  const CharacteristicGame big8 = random_game(8, 1234);
  const auto phi8 = exact_shapley(big8);
  CHECK(std::abs(std::accumulate(phi8.begin(), phi8.end(), 0.0) - big8.value(255)) < 1e-9);
}

TEST_CASE("exact: empty coalition is forced to zero; player cap") {
  const CharacteristicGame g(2, [](std::uint32_t) { return 7.0; });
  CHECK(g.value(0) == 0.0);
  const auto phi = exact_shapley(g);
  CHECK(phi[0] == doctest::Approx(3.5));
  const CharacteristicGame huge(21, [](std::uint32_t) { return 1.0; });
  CHECK(error_code([&] { exact_shapley(huge); }) == "TooManyPlayers");
}

TEST_CASE("game json loader") {
  const auto g = CharacteristicGame::from_json(
      R"({"players": 3, "values": {"3": 50, "5": 30, "6": 40, "7": 80}})");
  CHECK(g.players() == 3);
  CHECK(g.value(3) == 50.0);
  CHECK(g.value(1) == 0.0);
  CHECK(exact_shapley(g) == exact_shapley(example_game()));
}

TEST_CASE("permutation: converges on the worked example") {
  const auto est = permutation_shapley(example_game(), 5000, 11);
  const auto exact = exact_shapley(example_game());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(est[i].n_samples == 5000);
    CHECK(std::abs(est[i].value - exact[i]) < 0.5);
  }
}

TEST_CASE("permutation: one ordering gives that ordering's marginals") {
  const auto est = permutation_shapley(example_game(), 1, 3);
  const double total = est[0].value + est[1].value + est[2].value;
  CHECK(total == doctest::Approx(80.0));
  CHECK(est[0].sample_variance == 0.0);
  // Marginals in this game are 0 (first arrival) or one of 30, 40, 50.
  for (const auto& e : est) {
    const double v = e.value;
    CHECK((v == 0 || v == 30 || v == 40 || v == 50));
  }
}

TEST_CASE("permutation: additive games are exact for any sample count") {
  const std::vector<double> w{1.5, -2.0, 4.0, 0.25};
  const CharacteristicGame g(4, [&](std::uint32_t s) {
    double v = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (s & (1U << i)) v += w[i];
    }
    return v;
  });
  for (std::size_t n : {1, 3, 17}) {
    const auto est = permutation_shapley(g, n, n);
    for (std::size_t i = 0; i < 4; ++i) CHECK(est[i].value == doctest::Approx(w[i]));
  }
}

TEST_CASE("permutation: deterministic per seed, seed-sensitive") {
  const CharacteristicGame g = random_game(5, 2);
  const auto a = permutation_shapley(g, 40, 9);
  const auto b = permutation_shapley(g, 40, 9);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a[i].value == b[i].value);
  const auto c = permutation_shapley(g, 40, 10);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs = differs || a[i].value != c[i].value;
  CHECK(differs);
}

TEST_CASE("permutation property: unbiased at small sample counts") {
  const CharacteristicGame g = random_game(6, 77);
  const auto exact = exact_shapley(g);
  const std::size_t runs = 200;
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> means;
    for (std::size_t r = 0; r < runs; ++r) {
      means.push_back(permutation_shapley(g, 10, 1000 + r)[i].value);
    }
    const ShapleyEstimate grand = summarize(means);
    CHECK(std::abs(grand.value - exact[i]) <= 3.0 * grand.standard_error());
  }
}

TEST_CASE("suffix samplers: nesting, range and category constraint") {
  const UniformSuffixSampler u(4, 3, 5);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto s = u.sample(i);
    CHECK(s.size() == 3);
    CHECK(s == u.sample(i));
    for (OperatorId op : s) CHECK((op.value >= -1 && op.value < 4));
  }
  const OperatorLibrary lib = builtin_library();
  const std::vector<CategoryId> cats{CategoryId{2}, CategoryId::null(), CategoryId{3}};
  const ConstrainedSuffixSampler c(lib, cats, 8);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto s = c.sample(i);
    REQUIRE(s.size() == 3);
    CHECK(lib.category_of(s[0]) == CategoryId{2});
    CHECK(s[1].is_null());
    CHECK(lib.category_of(s[2]) == CategoryId{3});
  }
  CHECK(enumerate_suffixes(4, 2).size() == 25);
  CHECK(enumerate_suffixes(4, 0).size() == 1);
}

TEST_CASE("conditional value: empty suffix is v(op) - v(NULL) exactly") {
  FunctionOracle oracle(toy_payoff);
  Evaluator eval(oracle);
  PositionContext ctx{{}, 1};
  const UniformSuffixSampler none(4, 0, 1);
  const ShapleyEstimate e = conditional_position_shapley(ctx, OperatorId{2}, none, 1, eval);
  CHECK(e.value == toy_payoff(pipe({2})) - toy_payoff(pipe({-1})));
  CHECK(eval.ledger().algorithmic_calls == 2);
}

TEST_CASE("conditional value: 2 calls per sample") {
  FunctionOracle oracle(toy_payoff);
  Evaluator eval(oracle);
  PositionContext ctx{{OperatorId{1}}, 4};
  const UniformSuffixSampler s(4, ctx.suffix_length(), 3);
  conditional_position_shapley(ctx, OperatorId{0}, s, 75, eval, Stage::Stage2);
  CHECK(eval.ledger().algorithmic_calls == 150);
  CHECK(eval.ledger().calls(Stage::Stage2) == 150);
}

TEST_CASE("conditional value: exhaustive suffixes equal a brute-force mean") {
  FunctionOracle oracle(toy_payoff);
  for (std::size_t j = 1; j <= 3; ++j) {
    std::vector<OperatorId> prefix;
    for (std::size_t k = 1; k < j; ++k) prefix.push_back(OperatorId{static_cast<int>(k % 4)});
    const std::size_t suffix_len = 3 - j;
    const auto suffixes = enumerate_suffixes(4, suffix_len);
    for (int cand = 0; cand < 4; ++cand) {
      Evaluator eval(oracle);
      const ShapleyEstimate e = conditional_position_shapley(
          PositionContext{prefix, 3}, OperatorId{cand}, suffixes, eval);
      // Independent loop over every suffix code.
      double sum = 0.0;
      std::size_t count = 0;
      std::size_t total = 1;
      for (std::size_t k = 0; k < suffix_len; ++k) total *= 5;
      for (std::size_t code = 0; code < total; ++code) {
        Pipeline with{prefix}, without{prefix};
        with.slots.push_back(OperatorId{cand});
        without.slots.push_back(kNullOp);
        std::size_t c = code;
        std::vector<OperatorId> q(suffix_len);
        for (std::size_t k = suffix_len; k-- > 0;) {
          q[k] = OperatorId{static_cast<int>(c % 5) - 1};
          c /= 5;
        }
        for (OperatorId op : q) {
          with.slots.push_back(op);
          without.slots.push_back(op);
        }
        sum += toy_payoff(with) - toy_payoff(without);
        ++count;
      }
      CHECK(std::abs(e.value - sum / static_cast<double>(count)) < 1e-12);
    }
  }
}

TEST_CASE("position values: worker count does not change estimates") {
  FunctionOracle oracle(toy_payoff);
  const UniformSuffixSampler s(4, 2, 21);
  std::vector<std::vector<OperatorId>> suffixes;
  for (std::size_t i = 0; i < 60; ++i) suffixes.push_back(s.sample(i));
  const std::vector<OperatorId> cands{OperatorId{0}, OperatorId{1}, OperatorId{2}, OperatorId{3}};
  Evaluator e1(oracle), e4(oracle);
  const auto a = estimate_position_values({OperatorId{2}}, cands, suffixes, e1, Stage::Other, 1);
  const auto b = estimate_position_values({OperatorId{2}}, cands, suffixes, e4, Stage::Other, 4);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].sample_variance == b[i].sample_variance);
  }
}

TEST_CASE("construction: exhaustive budget on four operators, three slots") {
  FunctionOracle oracle(toy_payoff);
  Evaluator eval(oracle);
  PositionConstructionConfig cfg;
  cfg.length = 3;
  cfg.mode = SuffixMode::Exhaustive;
  const PositionConstruction c = construct_by_position_shapley(4, cfg, eval);
  CHECK(eval.ledger().algorithmic_calls == 248);
  CHECK(exhaustive_construction_calls(4, 3) == 248);
  CHECK(c.tables.size() == 3);
  CHECK(c.pipeline.size() == 3);
  // Sum over positions of 2 * 25 * 26^(6-j) = 2 * (26^6 - 1).
  CHECK(exhaustive_construction_calls(25, 6) == 2ULL * (308915776ULL - 1));
}

TEST_CASE("construction: single slot picks the argmax") {
  FunctionOracle oracle([](const Pipeline& p) {
    if (p[0] == OperatorId{0}) return 0.9;
    if (p[0] == OperatorId{1}) return 0.7;
    return 0.5;
  });
  Evaluator eval(oracle);
  PositionConstructionConfig cfg;
  cfg.length = 1;
  cfg.mode = SuffixMode::Exhaustive;
  CHECK(construct_by_position_shapley(2, cfg, eval).pipeline == pipe({0}));
}

TEST_CASE("construction: NULL only when nothing helps; disabled NULL takes the argmax") {
  FunctionOracle harmful([](const Pipeline& p) {
    double v = 0.8;
    for (OperatorId op : p.slots) {
      if (!op.is_null()) v -= 0.1 * (op.value + 1);
    }
    return v;
  });
  Evaluator eval(harmful);
  PositionConstructionConfig cfg;
  cfg.length = 2;
  cfg.mode = SuffixMode::Exhaustive;
  CHECK(construct_by_position_shapley(3, cfg, eval).pipeline == pipe({-1, -1}));
  cfg.allow_null = false;
  CHECK(construct_by_position_shapley(3, cfg, eval).pipeline == pipe({0, 0}));
}

TEST_CASE("construction property: constant payoff shifts keep the pipeline") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double shift = static_cast<double>(seed) * 0.37 - 1.0;
    FunctionOracle base(toy_payoff);
    FunctionOracle shifted([&](const Pipeline& p) { return toy_payoff(p) + shift; });
    PositionConstructionConfig cfg;
    cfg.length = 3;
    cfg.n_samples = 12;
    cfg.seed = seed;
    Evaluator e1(base), e2(shifted);
    CHECK(construct_by_position_shapley(4, cfg, e1).pipeline ==
          construct_by_position_shapley(4, cfg, e2).pipeline);
  }
}

TEST_CASE("construction: exhaustive mode respects the cap") {
  FunctionOracle oracle(toy_payoff);
  Evaluator eval(oracle);
  PositionConstructionConfig cfg;
  cfg.length = 6;
  cfg.mode = SuffixMode::Exhaustive;
  CHECK(error_code([&] { construct_by_position_shapley(25, cfg, eval); }) ==
        "SearchSpaceTooLarge");
  CHECK(eval.ledger().algorithmic_calls == 0);
}

TEST_CASE("select_best: ties to the lowest index, NULL rule") {
  CHECK(select_best(std::vector<double>{0.1, 0.3, 0.3}, true) == 1);
  CHECK(select_best(std::vector<double>{-0.1, 0.0}, true) == -1);
  CHECK(select_best(std::vector<double>{-0.1, 0.0}, false) == 1);
}
