#include <doctest.h>

#include <cmath>

#include "mmx/core/counterfactual.hpp"
#include "mmx/games/matrix.hpp"

using namespace mmx;
using namespace mmx::matrix;

namespace {

// Independent expectation: nested loops over a 3-player 2x2x2 game.
UtilityVector brute_expectation(const MatrixGame& g, const std::vector<std::vector<double>>& pol) {
  UtilityVector out(3, 0.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double w = pol[0][a] * pol[1][b] * pol[2][c];
        const std::vector<int> joint{a, b, c};
        for (int i = 0; i < 3; ++i) out[i] += w * g.payoff(joint)[i];
      }
  return out;
}

}  // namespace

TEST_CASE("construction and indexing") {
  MatrixGame g({2, 3}, std::vector<UtilityVector>(6, UtilityVector{0, 0}));
  CHECK(g.num_joint_actions() == 6);
  for (std::size_t n = 0; n < 6; ++n) CHECK(g.flat_index(g.unflatten(n)) == n);
  CHECK(g.unflatten(5) == std::vector<int>{1, 2});
  CHECK_THROWS_AS(MatrixGame({2, 2}, std::vector<UtilityVector>(3, UtilityVector{0, 0})), ConfigError);
  CHECK_THROWS_AS(MatrixGame({2}, std::vector<UtilityVector>(2, UtilityVector{0})), ConfigError);
  CHECK_THROWS_AS(MatrixGame({1, 1}, {UtilityVector{0, NAN}}), ConfigError);
  CHECK_THROWS_AS(MixedPolicy({{0.5, 0.4}}), ConfigError);
  CHECK_THROWS_AS(MixedPolicy({{1.5, -0.5}}), ConfigError);
}

TEST_CASE("exact expected utility") {
  // All deterministic: the single cell.
  std::vector<UtilityVector> cells;
  for (int n = 0; n < 8; ++n) cells.push_back({double(n), double(-n), double(n * n)});
  MatrixGame g({2, 2, 2}, cells);
  CHECK(exact_expected_utility(g, {{0, 1}, {1, 0}, {0, 1}}, {}) == g.payoff(std::vector<int>{1, 0, 1}));

  MatrixGame zero({2, 2}, std::vector<UtilityVector>(4, UtilityVector{0, 0}));
  CHECK(exact_expected_utility(zero, {{0.3, 0.7}, {0.5, 0.5}}, {}) == UtilityVector{0, 0});

  // Agent 0 pinned to action 1, others uniform: average of cells 4..7.
  PinnedActionSet<int> pin;
  pin.add(0, 1, 0);
  const UtilityVector e = exact_expected_utility(g, {{0.9, 0.1}, {0.5, 0.5}, {0.5, 0.5}}, pin);
  CHECK(e[0] == doctest::Approx((4 + 5 + 6 + 7) / 4.0));
  CHECK(e[1] == doctest::Approx(-(4 + 5 + 6 + 7) / 4.0));
  CHECK(e[2] == doctest::Approx((16 + 25 + 36 + 49) / 4.0));

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    RandomInstance inst = random_instance(3, 2, rng);
    const UtilityVector a = exact_expected_utility(*inst.game, inst.policies, {});
    const UtilityVector b = brute_expectation(*inst.game, inst.policies);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("exact relation matrix") {
  std::vector<UtilityVector> cells;
  for (int n = 0; n < 4; ++n) cells.push_back({double(n % 3), double(n % 3), -double(n % 3)});
  MatrixGame g({2, 2, 1}, cells);
  RelationMatrix m = exact_relation_matrix(g, {{0.5, 0.5}, {0.3, 0.7}, {1.0}});
  CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));

  MatrixGame flat({2, 2}, std::vector<UtilityVector>(4, UtilityVector{1, 2}));
  RelationMatrix f = exact_relation_matrix(flat, {{0.5, 0.5}, {0.5, 0.5}});
  CHECK(f.degenerate[0]);
  CHECK(f(0, 1) == 0.0);
}

TEST_CASE("deterministic one-step simulation returns the payoff") {
  std::vector<UtilityVector> cells;
  for (int n = 0; n < 8; ++n) cells.push_back({double(n), 1.0, -2.0 * n});
  auto g = std::make_shared<const MatrixGame>(std::vector<int>{2, 2, 2}, cells);
  auto model = make_model(g, {{0, 1}, {1, 0}, {1, 0}});
  UtilityMatrix x = simulate(model, g->initial_state(), 5, 1, {}, SeededRng(1));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(x(r, c) == cells[4][c]);

  // Pins make the game deterministic; the row equals the direct evaluation.
  auto mixed = make_model(g, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
  PinnedActionSet<int> all;
  all.add(0, 0, 0).add(1, 1, 0).add(2, 1, 0);
  UtilityMatrix y = simulate(mixed, g->initial_state(), 1, 1, all, SeededRng(2));
  Rng unused(0);
  const std::vector<int> joint{0, 1, 1};
  const MatrixState next = g->transition(g->initial_state(), joint, unused);
  const UtilityVector direct = utility_of_outcome(*g, ZeroValue<MatrixState>(3), g->initial_state(), next, unused);
  for (std::size_t c = 0; c < 3; ++c) CHECK(y(0, c) == direct[c]);
}

TEST_CASE("sbue tracks the enumerated expectation") {
  Rng rng(17);
  RandomInstance inst = random_instance(3, 2, rng);
  auto model = make_model(inst.game, inst.policies);
  PinnedActionSet<int> pin;
  pin.add(0, 1, 0);
  const UtilityVector exact = exact_expected_utility(*inst.game, inst.policies, pin);
  const int k = 4000;
  UtilityMatrix x = simulate(model, inst.game->initial_state(), k, 1, pin, SeededRng(5));
  const BaselineMoments mom = column_moments(x);
  const SbueExplanation e = sbue(model, inst.game->initial_state(), pin, k, false, std::nullopt, SeededRng(5));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(e.expected_utility[i] - exact[i]) <= 4.0 * mom.sigma[i] / std::sqrt(k));
  // Own utility equals the agent's component of SBUE.
  CHECK(expected_own_utility(model, inst.game->initial_state(), 0, 1, k, SeededRng(5)) == e.expected_utility[0]);
}

TEST_CASE("fair coin baseline") {
  std::vector<UtilityVector> cells{{0, 0}, {1, 0}};
  auto g = std::make_shared<const MatrixGame>(std::vector<int>{2, 1}, cells);
  auto model = make_model(g, {{0.5, 0.5}, {1.0}});
  const int k = 20000;
  BaselineMoments m = baseline_moments(model, g->initial_state(), k, 1, SeededRng(12));
  CHECK(std::abs(m.mu[0] - 0.5) <= 4.0 * 0.5 / std::sqrt(k));
  CHECK(m.degenerate[1]);
  CHECK(m.mu[1] == 0.0);
  CHECK_THROWS_AS(baseline_moments(model, g->initial_state(), 1, 1, SeededRng(1)), ConfigError);
}

TEST_CASE("probable action of a 0.7/0.3 opponent") {
  std::vector<UtilityVector> cells(4, UtilityVector{0, 0});
  auto g = std::make_shared<const MatrixGame>(std::vector<int>{2, 2}, cells);
  auto model = make_model(g, {{0.5, 0.5}, {0.3, 0.7}});
  PinnedActionSet<int> pin;
  pin.add(0, 0, 0);
  const int k = 1000;
  auto pa = probable_actions(model, g->initial_state(), pin, k, SeededRng(8));
  REQUIRE(pa.per_agent[1].has_value());
  CHECK(pa.per_agent[1]->action == 1);
  CHECK(std::abs(pa.per_agent[1]->frequency - 0.7) <= 4.0 * std::sqrt(0.21 / k));
}

TEST_CASE("json round trip") {
  const json j = json::parse(R"({"actions_per_agent":[2,2],"payoffs":[[[1,-1],[0,0]],[[2,3],[4,5]]],
                                 "policies":[[0.25,0.75],[1,0]]})");
  LoadedGame lg = from_json(j);
  CHECK(lg.game->payoff(std::vector<int>{1, 0}) == UtilityVector{2, 3});
  CHECK(lg.policies[0][1] == 0.75);
  LoadedGame again = from_json(to_json(*lg.game, lg.policies));
  CHECK(again.game->payoff(std::vector<int>{1, 1}) == UtilityVector{4, 5});
  LoadedGame uniform = from_json(json::parse(R"({"actions_per_agent":[2,1],"payoffs":[[[1,2]],[[3,4]]]})"));
  CHECK(uniform.policies[0] == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(from_json(json::parse(R"({"actions_per_agent":[2,2],"payoffs":[[1,2]]})")), ConfigError);
  CHECK_THROWS_AS(from_json(json::parse(R"({"payoffs":[]})")), ConfigError);
}
