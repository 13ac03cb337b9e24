#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mmx/core/counterfactual.hpp"
#include "mmx/core/explain.hpp"
#include "mmx/core/explain_json.hpp"

using namespace mmx;

namespace {

// Counter game: state is the step index; each agent picks an integer in
// [0, n) and receives it as reward. V(s) = (s, -s) for two agents.
struct CounterState {
  int t = 0;
  bool operator==(const CounterState&) const = default;
};

class CounterEnv final : public Environment<CounterState, int> {
 public:
  CounterEnv(int horizon, double gamma, int n = 3) : horizon_(horizon), gamma_(gamma), n_(n) {}
  int num_agents() const override { return 2; }
  double discount() const override { return gamma_; }
  bool is_terminal(const CounterState& s) const override { return s.t >= horizon_; }
  CounterState transition(const CounterState& s, std::span<const int>, Rng&) const override { return {s.t + 1}; }
  UtilityVector reward(const CounterState&, const CounterState&) const override { return {1.0, 2.0}; }
  bool is_legal(const CounterState& s, AgentId, const int& a) const override { return !is_terminal(s) && a >= 0 && a < n_; }
  std::optional<std::vector<int>> legal_actions(const CounterState&, AgentId) const override {
    std::vector<int> out;
    for (int a = 0; a < n_; ++a) out.push_back(a);
    return out;
  }
  std::string encode(const int& a) const override { return "a" + std::to_string(a); }

 private:
  int horizon_;
  double gamma_;
  int n_;
};

class CounterValue final : public ValueFunction<CounterState> {
 public:
  UtilityVector evaluate(const CounterState& s, Rng&) const override { return {double(s.t), -double(s.t)}; }
};

class UniformInt final : public Policy<CounterState, int> {
 public:
  explicit UniformInt(int n) : n_(n) {}
  int sample(const CounterState&, AgentId, Rng& rng) const override { return static_cast<int>(rng.uniform_int(n_)); }

 private:
  int n_;
};

class ConstPolicy final : public Policy<CounterState, int> {
 public:
  explicit ConstPolicy(int a) : a_(a) {}
  int sample(const CounterState&, AgentId, Rng&) const override { return a_; }

 private:
  int a_;
};

GameModel<CounterState, int> counter_model(int horizon, double gamma) {
  GameModel<CounterState, int> m;
  m.env = std::make_shared<CounterEnv>(horizon, gamma);
  m.policies = {std::make_shared<UniformInt>(3), std::make_shared<UniformInt>(3)};
  m.values = std::make_shared<CounterValue>();
  return m;
}

}  // namespace

TEST_CASE("utility of an outcome") {
  CHECK(combine_utility(1.0, {0, 0, 0}, {0, 0, 0}) == UtilityVector{0, 0, 0});
  CHECK(combine_utility(1.0, {0, 0, 0}, {1, 2, 3}) == UtilityVector{1, 2, 3});
  CHECK(combine_utility(0.5, {4, 2, -6}, {0, -10, 0}) == UtilityVector{2, -9, -3});
  CHECK(combine_utility(0.0, {1e300, -7, 3}, {1, 2, 3}) == UtilityVector{1, 2, 3});
  CHECK_THROWS_AS(combine_utility(1.0, {0, NAN}, {0, 0}), EstimationError);
  try {
    combine_utility(1.0, {0, 0}, {0, INFINITY});
    FAIL("expected throw");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("agent 1") != std::string::npos);
  }
}

TEST_CASE("seeded streams are reproducible and distinct") {
  SeededRng seed(42);
  Rng a = seed.stream(3), b = seed.stream(3), c = seed.stream(4);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(seed.stream(3).next_u64() != c.next_u64());
  CHECK(seed.fork(1).root() != seed.fork(2).root());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.uniform_int(7) < 7u);
  }
  const std::vector<double> w{0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(r.categorical(w) == 1u);
}

TEST_CASE("parallel_for rethrows the smallest failing index") {
  for (int workers : {1, 2, 4}) {
    try {
      parallel_for(100, workers, [](std::size_t i) {
        if (i == 30 || i == 80) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "30");
    }
  }
}

TEST_CASE("simulate shape and row formula") {
  // Deterministic rewards (1,2), V(s)=(t,-t): row t of each rollout is
  // gamma^{t+1} V(s_{t+1}) + sum_{u<=t} gamma^u R.
  const double g = 0.5;
  auto m = counter_model(10, g);
  UtilityMatrix x = simulate(m, CounterState{}, 2, 3, {}, SeededRng(1));
  CHECK(x.rows() == 6);
  CHECK(x.cols() == 2);
  for (int j = 0; j < 2; ++j) {
    double cum0 = 0, cum1 = 0, gt = 1;
    for (int t = 0; t < 3; ++t) {
      cum0 += gt * 1.0;
      cum1 += gt * 2.0;
      const double v = t + 1;
      CHECK(x(j * 3 + t, 0) == doctest::Approx(g * gt * v + cum0).epsilon(1e-15));
      CHECK(x(j * 3 + t, 1) == doctest::Approx(-g * gt * v + cum1).epsilon(1e-15));
      gt *= g;
    }
  }
}

TEST_CASE("simulate with gamma 0 yields realized reward only") {
  auto m = counter_model(10, 0.0);
  UtilityMatrix x = simulate(m, CounterState{}, 3, 4, {}, SeededRng(9));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    CHECK(x(r, 0) == 1.0);
    CHECK(x(r, 1) == 2.0);
  }
}

TEST_CASE("terminal states repeat with zero reward") {
  auto m = counter_model(1, 1.0);
  UtilityMatrix x = simulate(m, CounterState{}, 1, 3, {}, SeededRng(0));
  for (int t = 0; t < 3; ++t) {
    CHECK(x(t, 0) == 2.0);   // V(1)=1 + R=1
    CHECK(x(t, 1) == 1.0);   // V(1)=-1 + R=2
  }
}

TEST_CASE("simulate validates inputs") {
  auto m = counter_model(5, 1.0);
  CHECK_THROWS_AS(simulate(m, CounterState{}, 0, 1, {}, SeededRng(0)), ConfigError);
  CHECK_THROWS_AS(simulate(m, CounterState{}, 1, 0, {}, SeededRng(0)), ConfigError);
  CHECK_THROWS_AS(simulate(m, CounterState{5}, 1, 1, {}, SeededRng(0)), ConfigError);
  PinnedActionSet<int> deep;
  deep.add(0, 1, 2);
  CHECK_THROWS_AS(simulate(m, CounterState{}, 1, 2, deep, SeededRng(0)), ConfigError);
  PinnedActionSet<int> bad;
  bad.add(1, 7, 0);
  try {
    simulate(m, CounterState{}, 1, 1, bad, SeededRng(0));
    FAIL("expected throw");
  } catch (const ConstraintViolation& e) {
    CHECK(std::string(e.what()).find("agent 1") != std::string::npos);
    CHECK(std::string(e.what()).find("depth 0") != std::string::npos);
  }
  PinnedActionSet<int> dup;
  dup.add(0, 1, 0);
  CHECK_THROWS_AS(dup.add(0, 2, 0), ConfigError);
  GameModel<CounterState, int> broken = m;
  broken.policies.pop_back();
  CHECK_THROWS_AS(simulate(broken, CounterState{}, 1, 1, {}, SeededRng(0)), ConfigError);
}

TEST_CASE("simulate is worker-count independent and writes traces in order") {
  auto m = counter_model(10, 0.9);
  std::ostringstream t1, t4;
  UtilityMatrix a = simulate(m, CounterState{}, 37, 3, {}, SeededRng(5), {1, &t1});
  UtilityMatrix b = simulate(m, CounterState{}, 37, 3, {}, SeededRng(5), {4, &t4});
  CHECK(a == b);
  CHECK(t1.str() == t4.str());
  std::istringstream lines(t1.str());
  std::string first;
  std::getline(lines, first);
  const json j = json::parse(first);
  CHECK(j["sim"] == 0);
  CHECK(j["depth"] == 0);
  CHECK(j["joint_action"].size() == 2);
}

TEST_CASE("pins overwrite without shifting the random stream") {
  // Agent 1's draws are identical with and without a pin on agent 0.
  GameModel<CounterState, int> m = counter_model(10, 1.0);
  PinnedActionSet<int> pin;
  pin.add(0, 2, 0);
  for (int j = 0; j < 20; ++j) {
    Rng r1 = SeededRng(3).stream(j), r2 = SeededRng(3).stream(j);
    auto free = draw_joint_action(m, CounterState{}, 0, {}, r1);
    auto pinned = draw_joint_action(m, CounterState{}, 0, pin, r2);
    CHECK(pinned[0] == 2);
    CHECK(pinned[1] == free[1]);
  }
}

TEST_CASE("z-score standardization") {
  UtilityMatrix x(3, 2);
  x(0, 0) = 2; x(1, 0) = -2; x(2, 0) = 4;
  x(0, 1) = 5; x(1, 1) = 5; x(2, 1) = 5;
  BaselineMoments m{{0, 5}, {2, 0}, {false, true}, 3};
  Standardized z = zscore_standardize(x, m);
  CHECK(z.values(0, 0) == 1.0);
  CHECK(z.values(1, 0) == -1.0);
  CHECK(z.values(2, 0) == 2.0);
  CHECK(z.values(0, 1) == 0.0);
  CHECK(z.degenerate[1]);
  CHECK_FALSE(z.degenerate[0]);

  BaselineMoments wrong{{0}, {1}, {false}, 3};
  CHECK_THROWS_AS(zscore_standardize(x, wrong), DimensionError);

  BaselineMoments constant = column_moments(x);
  CHECK(constant.degenerate[1]);
  CHECK(constant.mu[1] == 5.0);
  CHECK(constant.sigma[1] == 0.0);
}

TEST_CASE("standardizing the baseline sample gives mean 0 and sd 1") {
  Rng rng(11);
  UtilityMatrix x(500, 3);
  for (std::size_t r = 0; r < 500; ++r)
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = 10.0 * rng.uniform01() - 3.0 * c;
  Standardized z = zscore_standardize(x, column_moments(x));
  BaselineMoments m = column_moments(z.values);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::abs(m.mu[c]) < 1e-9);
    CHECK(std::abs(m.sigma[c] - 1.0) < 1e-9);
  }
}

TEST_CASE("z-score is invariant under a shared positive affine map") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    // Power-of-two scale, integer shift, integer data and 32 rows keep every
    // operation exact.
    UtilityMatrix x(32, 1);
    for (std::size_t r = 0; r < 32; ++r) x(r, 0) = static_cast<double>(rng.uniform_int(41)) - 20.0;
    const double a = std::ldexp(1.0, static_cast<int>(rng.uniform_int(6)));
    const double b = static_cast<double>(rng.uniform_int(100));
    UtilityMatrix y(32, 1);
    for (std::size_t r = 0; r < 32; ++r) y(r, 0) = a * x(r, 0) + b;
    BaselineMoments mx = column_moments(x);
    BaselineMoments my = mx;
    my.mu[0] = a * mx.mu[0] + b;
    my.sigma[0] = a * mx.sigma[0];
    CHECK(zscore_standardize(x, mx).values == zscore_standardize(y, my).values);

    // General positive scales agree to rounding.
    const double s = 0.1 + 5.0 * rng.uniform01();
    const double sh = 20.0 * rng.uniform01() - 10.0;
    UtilityMatrix w(32, 1);
    for (std::size_t r = 0; r < 32; ++r) w(r, 0) = s * x(r, 0) + sh;
    BaselineMoments mw = mx;
    mw.mu[0] = s * mx.mu[0] + sh;
    mw.sigma[0] = s * mx.sigma[0];
    const auto zx = zscore_standardize(x, mx).values;
    const auto zw = zscore_standardize(w, mw).values;
    for (std::size_t r = 0; r < 32; ++r) CHECK(std::abs(zx(r, 0) - zw(r, 0)) < 1e-12);
  }
}

TEST_CASE("pearson over columns") {
  Rng rng(4);
  UtilityMatrix x(200, 4);
  for (std::size_t r = 0; r < 200; ++r) {
    const double u = rng.uniform01() * 10.0 - 5.0;
    x(r, 0) = u;
    x(r, 1) = u;
    x(r, 2) = -u;
    x(r, 3) = 7.0;
  }
  RelationMatrix m = pearson_columns(x);
  CHECK(m(0, 1) == 1.0);
  CHECK(m(0, 2) == -1.0);
  CHECK(m(1, 2) == -1.0);
  CHECK(m(0, 0) == 1.0);
  CHECK(m.degenerate[3]);
  CHECK(m(3, 3) == 0.0);
  CHECK(m(0, 3) == 0.0);
  CHECK(m.any_degenerate());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(m(i, j) == m(j, i));
}

TEST_CASE("pearson is affine invariant per column") {
  Rng rng(8);
  UtilityMatrix x(300, 3);
  for (std::size_t r = 0; r < 300; ++r) {
    const double u = rng.uniform01(), v = rng.uniform01();
    x(r, 0) = u;
    x(r, 1) = u + v;
    x(r, 2) = v - 2 * u;
  }
  RelationMatrix base = pearson_columns(x);
  UtilityMatrix pos = x, neg = x;
  for (std::size_t r = 0; r < 300; ++r) {
    pos(r, 1) = 3.5 * x(r, 1) - 12.0;
    neg(r, 1) = -0.25 * x(r, 1) + 4.0;
  }
  RelationMatrix mp = pearson_columns(pos), mn = pearson_columns(neg);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(mp(i, j) - base(i, j)) < 1e-9);
      const double sign = (i == 1) != (j == 1) ? -1.0 : 1.0;
      CHECK(std::abs(mn(i, j) - sign * base(i, j)) < 1e-9);
    }
}

TEST_CASE("relation ranking") {
  RelationMatrix m;
  m.p = 4;
  m.r = {1, 0.9, -0.2, 0.4, 0.9, 1, 0, 0, -0.2, 0, 1, 0, 0.4, 0, 0, 1};
  m.degenerate.assign(4, false);
  RelationRanking rk = rank_relations(m, 0);
  CHECK(rk.friends == std::vector<AgentId>{1, 3, 2});
  CHECK(rk.enemies == std::vector<AgentId>{2, 3, 1});

  RelationRanking ties = rank_by_scores({0, 0.5, 0.5, 0.5}, 0);
  CHECK(ties.friends == std::vector<AgentId>{1, 2, 3});
  CHECK(ties.enemies == std::vector<AgentId>{1, 2, 3});

  m.degenerate[0] = true;
  CHECK_THROWS_AS(rank_relations(m, 0), EstimationError);

  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = std::round(rng.uniform01() * 8.0) / 4.0 - 1.0;
    RelationRanking a = rank_by_scores(s, 2);
    std::vector<double> t = s;
    for (auto& v : t) v = std::exp(3.0 * v) + 1.0;  // strictly increasing
    RelationRanking b = rank_by_scores(t, 2);
    CHECK(a.friends == b.friends);
    // Without ties hostility is the reversed friendliness order.
    std::set<double> distinct;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != 2) distinct.insert(s[i]);
    if (distinct.size() == 5) CHECK(std::vector<AgentId>(a.friends.rbegin(), a.friends.rend()) == a.enemies);
  }
}

TEST_CASE("relation bands") {
  RelationBands bands;
  CHECK(bands.label(0.5) == "friend");
  CHECK(bands.label(-0.5) == "enemy");
  CHECK(bands.label(0.1) == "neutral");
  RelationBands bad{-0.1, -0.3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sbue equals column means of the d=1 simulation") {
  auto m = counter_model(10, 0.9);
  PinnedActionSet<int> pin;
  pin.add(0, 1, 0);
  SbueExplanation e = sbue(m, CounterState{}, pin, 50, false, std::nullopt, SeededRng(3));
  UtilityMatrix x = simulate(m, CounterState{}, 50, 1, pin, SeededRng(3));
  const auto means = column_means(x);
  CHECK(e.expected_utility == means);
  CHECK_FALSE(e.standardized.has_value());
  CHECK_THROWS_AS(sbue(m, CounterState{}, {}, 10, false, std::nullopt, SeededRng(3)), ConfigError);
  CHECK_THROWS_AS(sbue(m, CounterState{}, pin, 10, true, std::nullopt, SeededRng(3)), ConfigError);
  PinnedActionSet<int> late;
  late.add(0, 1, 1);
  CHECK_THROWS_AS(sbue(m, CounterState{}, late, 10, false, std::nullopt, SeededRng(3)), ConfigError);

  const BaselineMoments base = baseline_moments(m, CounterState{}, 50, 1, SeededRng(4));
  SbueExplanation z = sbue(m, CounterState{}, pin, 50, true, base, SeededRng(3));
  REQUIRE(z.standardized.has_value());
  CHECK(z.degenerate.size() == 2);
}

TEST_CASE("probable actions") {
  GameModel<CounterState, int> m = counter_model(10, 1.0);
  m.policies[1] = std::make_shared<ConstPolicy>(2);
  PinnedActionSet<int> pin;
  pin.add(0, 0, 0);
  ProbableActions<int> pa = probable_actions(m, CounterState{}, pin, 20, SeededRng(1));
  CHECK_FALSE(pa.per_agent[0].has_value());
  REQUIRE(pa.per_agent[1].has_value());
  CHECK(pa.per_agent[1]->action == 2);
  CHECK(pa.per_agent[1]->frequency == 1.0);

  // Uniform over three actions: frequencies sum to 1 and the mode is the
  // most frequent encoding.
  ProbableActions<int> pu = probable_actions(counter_model(10, 1.0), CounterState{}, pin, 301, SeededRng(2));
  double total = 0.0, best = 0.0;
  for (const auto& [enc, f] : pu.per_agent[1]->histogram) {
    total += f;
    best = std::max(best, f);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pu.per_agent[1]->frequency == best);
}

TEST_CASE("probable action ties go to the smallest encoding") {
  std::map<std::string, std::pair<int, std::size_t>> counts{{"b", {1, 1}}, {"a", {0, 1}}};
  CHECK(detail::modal_from_counts(counts, 2).encoding == "a");
}

TEST_CASE("probable trajectory") {
  GameModel<CounterState, int> m = counter_model(2, 1.0);
  m.policies = {std::make_shared<ConstPolicy>(1), std::make_shared<ConstPolicy>(0)};
  PinnedActionSet<int> pin;
  pin.add(0, 2, 0);
  auto t = probable_trajectory(m, CounterState{}, pin, 5, 3, SeededRng(1));
  CHECK(t.truncated);
  CHECK(t.turns.size() == 2);
  CHECK(t.joint_actions[0] == std::vector<int>{2, 0});
  CHECK(t.joint_actions[1] == std::vector<int>{1, 0});
  CHECK(t.states.back().t == 2);

  auto one = probable_trajectory(counter_model(10, 1.0), CounterState{}, pin, 40, 1, SeededRng(6));
  auto direct = probable_actions(counter_model(10, 1.0), CounterState{}, pin, 40, SeededRng(6));
  const std::vector<std::string> agents{"x", "y"};
  CHECK(to_json_text(modal_actions_json(one.turns[0], agents)) == to_json_text(modal_actions_json(direct, agents)));
}

TEST_CASE("sica on identical and negated columns") {
  auto m = counter_model(10, 1.0);
  RelationMatrix r = sica(m, CounterState{}, 30, 4, SeededRng(1));
  // With gamma = 1 the columns are 2(t+1) and (t+1): perfectly correlated.
  CHECK(r(0, 1) == 1.0);
  CHECK(r.k_used == 30);
  CHECK(r.d_used == 4);
  CHECK_THROWS_AS(sica(m, CounterState{}, 1, 1, SeededRng(1)), ConfigError);
}

TEST_CASE("json text keeps 17 digits") {
  json j = {{"x", 0.1}, {"v", {1.0, 2.5}}, {"n", 3}};
  const std::string s = to_json_text(j, -1);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(json::parse(s)["x"].get<double>() == 0.1);
  CHECK(format_double(NAN) == "null");
  CHECK(json::parse(to_json_text(j)) == json::parse(s));
}

TEST_CASE("explanation wire form") {
  RelationMatrix m;
  m.p = 2;
  m.r = {1, -0.5, -0.5, 1};
  m.degenerate = {false, false};
  json j = sica_to_json(m, {"a", "b"}, {100, 2, 7});
  CHECK(j["type"] == "sica");
  CHECK(j["matrix"][0][1] == -0.5);
  CHECK(j["labels"][0][1] == "enemy");
  CHECK(j["meta"]["k"] == 100);
  CHECK(j["meta"]["d"] == 2);
  CHECK(j["meta"]["seed"] == 7);
  for (const char* key : {"type", "agents", "values", "matrix", "modal_actions", "meta"}) CHECK(j.contains(key));
  SbueExplanation e{{1.5, -2.0}, std::nullopt, {}, 10};
  json s = sbue_to_json(e, {"a", "b"}, {10, 1, 3});
  CHECK(s["values"][1] == -2.0);
}

TEST_CASE("counterfactual primitives") {
  const std::vector<SubOrder> a{{"T1", "hold"}, {"T2", "attack(T3)"}, {"T4", "hold"}};
  const std::vector<SubOrder> b{{"T1", "hold"}, {"T2", "attack(T3)"}, {"T4", "reinforce(+1)"}};
  CHECK(order_similarity(a, a) == 1.0);
  CHECK(order_similarity(a, b) == doctest::Approx(2.0 / 3.0));
  CHECK(order_similarity({{"T1", "hold"}}, {{"T1", "attack(T2)"}}) == 0.0);
  CHECK(order_similarity({}, {}) == 1.0);
  CHECK(satisfies(a, {{Polarity::require, {"T1", "hold"}}}));
  CHECK_FALSE(satisfies(a, {{Polarity::forbid, {"T1", "hold"}}}));
  CHECK_FALSE(satisfies(a, {{Polarity::require, {"T4", "reinforce(+1)"}}}));
  CHECK(satisfies(a, {}));
}

TEST_CASE("counterfactual ranking") {
  std::vector<ScoredCounterfactual<int>> c(4);
  const double sims[] = {0.5, 1.0, 0.0, 0.5};
  const double utils[] = {3.0, -1.0, 10.0, 3.0};
  for (int i = 0; i < 4; ++i) {
    c[i].action = i;
    c[i].encoding = "e" + std::to_string(3 - i);
    c[i].similarity = sims[i];
    c[i].expected_own_utility = utils[i];
  }
  auto by_sim = rank_counterfactuals(c, 1.0, 0.0, 4);
  CHECK(by_sim[0].action == 1);
  CHECK(by_sim[1].encoding == "e0");  // tie on score and similarity
  auto by_util = rank_counterfactuals(c, 0.0, 1.0, 2);
  CHECK(by_util.size() == 2);
  CHECK(by_util[0].action == 2);

  // Shifting every raw utility leaves the ranking unchanged.
  auto shifted = c;
  for (auto& s : shifted) s.expected_own_utility += 123.0;
  auto r1 = rank_counterfactuals(c, 1.0, 1.0, 4), r2 = rank_counterfactuals(shifted, 1.0, 1.0, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r1[i].action == r2[i].action);

  CounterfactualParams p;
  p.kappa = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.alpha = p.beta = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("feasible set on an enumerable toy game") {
  auto m = counter_model(10, 1.0);
  m.policies[0] = std::make_shared<ConstPolicy>(1);
  CounterfactualQuery<int> q{1, {}};
  // Deterministic policy, kappa > 0: only the reference was sampled.
  auto fs = feasible_set(m, CounterState{}, 0, q, 0.5, 50, SeededRng(1));
  CHECK(fs.empty());
  CHECK(fs.status == FeasibleStatus::insufficient_support);
  CHECK(to_string(fs.status) == "raise K or lower kappa");
  // kappa = 0 adds the enumerated legal actions.
  auto all = feasible_set(m, CounterState{}, 0, q, 0.0, 50, SeededRng(1));
  CHECK(all.encodings == std::vector<std::string>{"a0", "a2"});
  CHECK(all.used_enumeration);
  CounterfactualQuery<int> none{1, {{Polarity::forbid, {"action", "a0"}}, {Polarity::forbid, {"action", "a2"}}}};
  auto empty = feasible_set(m, CounterState{}, 0, none, 0.0, 50, SeededRng(1));
  CHECK(empty.status == FeasibleStatus::unsatisfiable);
  CounterfactualQuery<int> contradict{1, {{Polarity::forbid, {"action", "a0"}}, {Polarity::require, {"action", "a0"}}}};
  CHECK_THROWS_AS(feasible_set(m, CounterState{}, 0, contradict, 0.0, 50, SeededRng(1)), ConfigError);
  CounterfactualQuery<int> illegal{9, {}};
  CHECK_THROWS_AS(feasible_set(m, CounterState{}, 0, illegal, 0.0, 50, SeededRng(1)), ConfigError);
}
