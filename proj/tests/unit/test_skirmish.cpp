#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mmx/core/counterfactual.hpp"
#include "mmx/games/skirmish.hpp"

using namespace mmx;
using namespace mmx::skirmish;

namespace {

constexpr AgentId N = kNeutral;

// Territories T1..Tn; edges given as index pairs.
SkirmishBoard board(int n, const std::vector<std::pair<int, int>>& edges, std::vector<AgentId> owner, std::vector<int> armies,
                    int agents = 2) {
  std::vector<std::string> ids;
  for (int t = 0; t < n; ++t) ids.push_back("T" + std::to_string(t + 1));
  std::vector<std::vector<std::string>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(ids[static_cast<std::size_t>(b)]);
    adj[static_cast<std::size_t>(b)].push_back(ids[static_cast<std::size_t>(a)]);
  }
  return make_board(ids, adj, owner, armies, agents);
}

SkirmishEnv env_for(const SkirmishBoard& b, SkirmishConfig c = {}) { return SkirmishEnv(c, b.map); }

int total_armies(const SkirmishBoard& b) { return std::accumulate(b.armies.begin(), b.armies.end(), 0); }

}  // namespace

TEST_CASE("board validation") {
  CHECK_NOTHROW(board(2, {{0, 1}}, {0, 1}, {1, 1}));
  CHECK_THROWS_AS(board(3, {{0, 1}}, {0, 1, N}, {1, 1, 0}), ConfigError);  // disconnected
  CHECK_THROWS_AS(board(2, {{0, 1}}, {0, 1}, {1, 0}), ConfigError);        // owned with no armies
  CHECK_THROWS_AS(board(2, {{0, 1}}, {0, 2}, {1, 1}), ConfigError);        // owner out of range
  CHECK_THROWS_AS(make_board({"A", "B"}, {{"B"}, {}}, {0, 1}, {1, 1}, 2), ConfigError);  // asymmetric
  CHECK_THROWS_AS(make_board({"A", "A"}, {{"A"}, {"A"}}, {0, 1}, {1, 1}, 2), ConfigError);
}

TEST_CASE("heuristic value") {
  const auto all = board(3, {{0, 1}, {1, 2}}, {0, 0, 0}, {2, 1, 4});
  CHECK(heuristic_value(all, 2) == UtilityVector{1.0, 0.0});
  const auto sym = board(4, {{0, 1}, {1, 2}, {2, 3}}, {0, 1, 2, N}, {2, 2, 2, 5}, 3);
  for (double v : heuristic_value(sym, 3)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Territory shares 3/4 and 1/4, armies 3 and 3.
  const auto mixed = board(4, {{0, 1}, {1, 2}, {2, 3}}, {0, 0, 0, 1}, {1, 1, 1, 3});
  const auto v = heuristic_value(mixed, 2);
  CHECK(v[0] == doctest::Approx(0.675).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.325).epsilon(1e-15));
  CHECK(v[0] + v[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("order enumeration for one territory") {
  const auto b = board(3, {{0, 1}, {0, 2}}, {0, N, 1}, {3, 0, 1});
  const auto env = env_for(b);
  const auto legal = env.legal_actions(b, 0);
  REQUIRE(legal);
  std::set<std::string> enc;
  for (const auto& a : *legal) enc.insert(env.encode(a));
  CHECK(enc == std::set<std::string>{"T1:hold", "T1:reinforce(1)", "T1:attack(T2)", "T1:attack(T3)", "T1:support(T2)",
                                      "T1:support(T3)"});
  // One army cannot attack.
  const auto weak = board(3, {{0, 1}, {0, 2}}, {0, N, 1}, {1, 0, 1});
  CHECK(env_for(weak).legal_actions(weak, 0)->size() == 4);
}

TEST_CASE("budget couples territories") {
  // Six territories: budget 2 shared across them.
  const auto b = board(7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}}, {0, 0, 0, 0, 0, 0, 1}, {1, 1, 1, 1, 1, 1, 1});
  const auto env = env_for(b);
  CHECK(reinforcement_budget(b, 0) == 2);
  CHECK(reinforcement_budget(b, 1) == 1);
  const auto legal = env.legal_actions(b, 0);
  REQUIRE(legal);
  for (const auto& a : *legal) {
    int spent = 0;
    for (const auto& o : a.orders) spent += o.kind == OrderKind::reinforce ? o.amount : 0;
    CHECK(spent <= 2);
    CHECK(env.is_legal(b, 0, a));
  }
  // Per territory: hold, reinforce 1..2, two supports (ends have one).
  // Count by brute force over the product.
  const auto space = env.action_space(b, 0);
  std::size_t count = 0;
  std::vector<std::size_t> idx(space.options.size(), 0);
  while (true) {
    int spent = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& o = space.options[i][idx[i]];
      if (o.kind == OrderKind::reinforce) spent += o.amount;
    }
    if (spent <= 2) ++count;
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == space.options[i].size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  CHECK(legal->size() == count);
}

TEST_CASE("eliminated agent and enumeration limit") {
  const auto b = board(2, {{0, 1}}, {0, 0}, {2, 2});
  const auto env = env_for(b, SkirmishConfig{.max_turns = 5});
  const auto space = env.action_space(b, 1);
  CHECK(space.eliminated);
  REQUIRE(space.actions.size() == 1);
  CHECK(space.actions[0].orders.empty());
  CHECK(env.encode(space.actions[0]) == "none");

  const auto big = board(4, {{0, 1}, {1, 2}, {2, 3}}, {0, 0, 0, 1}, {3, 3, 3, 3});
  SkirmishConfig c;
  c.enumeration_limit = 10;
  const auto small_env = env_for(big, c);
  const auto s = small_env.action_space(big, 0);
  CHECK_FALSE(s.enumerated);
  CHECK(s.product > 10);
  CHECK_FALSE(small_env.legal_actions(big, 0));
  Rng rng(1);
  UniformPolicy u(std::make_shared<SkirmishEnv>(small_env));
  for (int n = 0; n < 200; ++n) CHECK(small_env.is_legal(big, 0, u.sample(big, 0, rng)));
}

TEST_CASE("adjudication rules") {
  SUBCASE("unopposed attack on an empty neutral territory captures") {
    const auto other = board(3, {{0, 1}, {1, 2}}, {0, N, 1}, {3, 0, 1});
    const auto env3 = env_for(other);
    std::vector<SkirmishAction> joint{env3.parse_action("T1:attack(T2)"), env3.parse_action("T3:hold")};
    const auto next = env3.most_probable_transition(other, joint);
    CHECK(next.owner == std::vector<AgentId>{0, 0, 1});
    CHECK(next.armies == std::vector<int>{1, 2, 1});
    CHECK(next.turn == 1);
  }
  SUBCASE("equal mutual attack is a standoff") {
    const auto b = board(2, {{0, 1}}, {0, 1}, {2, 2});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T2)"), env.parse_action("T2:attack(T1)")};
    const auto next = env.most_probable_transition(b, joint);
    CHECK(next.owner == b.owner);
    CHECK(next.armies == b.armies);
  }
  SUBCASE("stronger side of a mutual attack wins") {
    const auto b = board(2, {{0, 1}}, {0, 1}, {4, 2});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T2)"), env.parse_action("T2:attack(T1)")};
    const auto next = env.most_probable_transition(b, joint);
    CHECK(next.owner == std::vector<AgentId>{0, 0});
    CHECK(next.armies == std::vector<int>{1, 1});  // 3 move in against 2 defenders
  }
  SUBCASE("reinforcements apply before combat") {
    const auto b = board(2, {{0, 1}}, {0, 1}, {2, 2});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T2)"), env.parse_action("T2:reinforce(1)")};
    const auto next = env.most_probable_transition(b, joint);
    CHECK(next.owner == b.owner);
    CHECK(next.armies == std::vector<int>{2, 3});
  }
  SUBCASE("supported attack 3 against a lone 2 captures") {
    // T1 (A, 2) attacks T3 (B, 2) with support from T2 (A, 1).
    const auto b = board(3, {{0, 1}, {0, 2}, {1, 2}}, {0, 0, 1}, {2, 1, 2});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T3);T2:support(T3)"), env.parse_action("T3:hold")};
    const auto next = env.most_probable_transition(b, joint);
    CHECK(next.owner == std::vector<AgentId>{0, 0, 0});
    CHECK(next.armies == std::vector<int>{1, 1, 1});
    // Without the support it is 2 against 2.
    joint[0] = env.parse_action("T1:attack(T3);T2:hold");
    CHECK(env.most_probable_transition(b, joint) == [&] {
      auto same = b;
      same.turn = 1;
      return same;
    }());
    // Defensive support restores the standoff.
    joint[0] = env.parse_action("T1:attack(T3);T2:support(T3)");
    const auto b2 = board(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}}, {0, 0, 1, 1}, {2, 1, 2, 1});
    const auto env2 = env_for(b2);
    std::vector<SkirmishAction> j2{env2.parse_action("T1:attack(T3);T2:support(T3)"), env2.parse_action("T3:hold;T4:support(T3)")};
    CHECK(env2.most_probable_transition(b2, j2).owner == b2.owner);
  }
  SUBCASE("two equal attackers bounce") {
    const auto b = board(3, {{0, 1}, {1, 2}}, {0, N, 1}, {3, 1, 3});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T2)"), env.parse_action("T3:attack(T2)")};
    const auto next = env.most_probable_transition(b, joint);
    CHECK(next.owner == b.owner);
    CHECK(next.armies == b.armies);
  }
  SUBCASE("illegal orders name the territory") {
    const auto b = board(3, {{0, 1}, {1, 2}}, {0, N, 1}, {3, 1, 3});
    const auto env = env_for(b);
    std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T3)"), env.parse_action("T3:hold")};
    try {
      (void)env.most_probable_transition(b, joint);
      FAIL("expected IllegalActionError");
    } catch (const IllegalActionError& e) {
      CHECK(std::string(e.what()).find("T1") != std::string::npos);
    }
    joint = {env.parse_action("T1:reinforce(2)"), env.parse_action("T3:hold")};
    CHECK_THROWS_AS(env.most_probable_transition(b, joint), IllegalActionError);
    joint = {SkirmishAction{}, env.parse_action("T3:hold")};
    CHECK_THROWS_WITH_AS(env.most_probable_transition(b, joint), doctest::Contains("T1"), IllegalActionError);
    joint = {env.parse_action("T1:hold"), env.parse_action("T3:hold;T2:hold")};
    CHECK_THROWS_AS(env.most_probable_transition(b, joint), IllegalActionError);
  }
}

TEST_CASE("conservation and agent relabeling") {
  const auto b = board(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}}, {0, 0, N, 1, 1, N}, {3, 2, 1, 3, 2, 0});
  SkirmishConfig c;
  c.max_turns = 30;
  auto env = std::make_shared<SkirmishEnv>(c, b.map);
  UniformPolicy pol(env);
  Rng rng(11);
  for (int game = 0; game < 30; ++game) {
    SkirmishBoard s = b;
    while (!env->is_terminal(s)) {
      std::vector<SkirmishAction> joint{pol.sample(s, 0, rng), pol.sample(s, 1, rng)};
      const auto next = env->most_probable_transition(s, joint);
      CHECK(total_armies(next) <= total_armies(s) + reinforcement_budget(s, 0) + reinforcement_budget(s, 1));
      for (std::size_t t = 0; t < next.owner.size(); ++t) {
        CHECK(next.armies[t] >= 0);
        if (next.owner[t] != kNeutral) CHECK(next.armies[t] >= 1);
      }
      // Swapping the agents' labels swaps the outcome.
      SkirmishBoard swapped = s;
      for (auto& o : swapped.owner)
        if (o != kNeutral) o = 1 - o;
      std::vector<SkirmishAction> rev{joint[1], joint[0]};
      auto expect = next;
      for (auto& o : expect.owner)
        if (o != kNeutral) o = 1 - o;
      CHECK(env->most_probable_transition(swapped, rev) == expect);
      s = next;
    }
  }
}

TEST_CASE("stochastic combat and the most probable transition") {
  // Attack strength 3 against 1: succeeds with probability 3/4.
  const auto b = board(2, {{0, 1}}, {0, 1}, {3, 1});
  SkirmishConfig c;
  c.stochastic = true;
  const auto env = env_for(b, c);
  std::vector<SkirmishAction> joint{env.parse_action("T1:attack(T2)"), env.parse_action("T2:hold")};
  // Both branches by hand.
  SkirmishBoard win = b, lose = b;
  win.owner = {0, 0};
  win.armies = {1, 1};
  win.turn = lose.turn = 1;
  CHECK(env.most_probable_transition(b, joint) == win);
  Rng rng(4);
  const int n = 4000;
  int wins = 0;
  for (int k = 0; k < n; ++k) {
    const auto next = env.transition(b, joint, rng);
    CHECK((next == win || next == lose));
    wins += next == win;
  }
  CHECK(std::abs(wins / double(n) - 0.75) <= 4.0 * std::sqrt(0.75 * 0.25 / n));

  // 2 against 2: each branch has probability 1/2, so nothing moves.
  const auto even = board(2, {{0, 1}}, {0, 1}, {2, 2});
  const auto env2 = env_for(even, c);
  std::vector<SkirmishAction> j2{env2.parse_action("T1:attack(T2)"), env2.parse_action("T2:hold")};
  CHECK(env2.most_probable_transition(even, j2).owner == even.owner);

  // The probable trajectory steps through the most probable branch.
  auto game = make_game(c, b, {PolicyKind::hold, PolicyKind::hold});
  PinnedActionSet<SkirmishAction> pin;
  pin.add(0, joint[0], 0);
  const auto traj = probable_trajectory(game.model, b, pin, 20, 1, SeededRng(3));
  REQUIRE(traj.states.size() == 2);
  CHECK(traj.states[1] == win);
}

TEST_CASE("policies") {
  const auto b = board(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {0, 0, 1, N}, {3, 1, 2, 1});
  auto env = std::make_shared<SkirmishEnv>(SkirmishConfig{}, b.map);
  UniformPolicy uni(env);
  const auto legal = env->legal_actions(b, 0);
  REQUIRE(legal);
  double total = 0.0;
  for (const auto& a : *legal) {
    CHECK(*uni.prob(b, 0, a) == doctest::Approx(1.0 / legal->size()).epsilon(1e-12));
    total += *uni.prob(b, 0, a);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*uni.prob(b, 0, env->parse_action("T1:reinforce(2);T2:hold")) == 0.0);

  // Empirical frequency of one action under uniform sampling.
  Rng rng(5);
  const int n = 20000;
  const std::string target = env->encode((*legal)[0]);
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += env->encode(uni.sample(b, 0, rng)) == target;
  const double p = 1.0 / legal->size();
  CHECK(std::abs(hits / double(n) - p) <= 4.0 * std::sqrt(p * (1 - p) / n));

  HeuristicPolicy heur(env, 0.5);
  for (int k = 0; k < 200; ++k) CHECK(env->is_legal(b, 1, heur.sample(b, 1, rng)));
  const auto m = heur.mode(b, 0);
  REQUIRE(m);
  CHECK(env->is_legal(b, 0, *m));
  // The strong territory attacks the weak neutral neighbor.
  CHECK(env->encode(*m).find("T1:attack(T4)") != std::string::npos);
  CHECK_THROWS_AS(HeuristicPolicy(env, 0.0), ConfigError);
}

TEST_CASE("sequential turns") {
  const auto b = board(2, {{0, 1}}, {0, 1}, {3, 3});
  SkirmishConfig c;
  c.sequential_turns = true;
  const auto env = env_for(b, c);
  CHECK(env.legal_actions(b, 0)->size() > 1);
  CHECK(env.legal_actions(b, 1)->size() == 1);
  auto next = b;
  next.turn = 1;
  CHECK(env.legal_actions(next, 0)->size() == 1);
  CHECK(env.legal_actions(next, 1)->size() > 1);
}

TEST_CASE("encoding, sub-orders and json") {
  const json j = json::parse(R"({
    "agents": 2,
    "weights": {"territory": 0.6, "army": 0.4},
    "max_turns": 4,
    "territories": [
      {"id": "N", "owner": 0, "armies": 3, "adjacent": ["S", "E"]},
      {"id": "S", "owner": 1, "armies": 2, "adjacent": ["N", "E"]},
      {"id": "E", "owner": null, "armies": 0, "adjacent": ["N", "S"]}
    ],
    "policies": ["heuristic", "uniform"]
  })");
  const auto game = game_from_json(j);
  CHECK(game.env->config().territory_weight == 0.6);
  CHECK(game.env->config().max_turns == 4);
  const auto a = game.env->parse_action("N:attack(E)");
  CHECK(game.env->encode(a) == "N:attack(E)");
  CHECK(game.env->is_legal(game.board, 0, a));
  CHECK(game.env->sub_orders(a) == std::vector<SubOrder>{{"N", "attack(E)"}});
  CHECK(*game.env->units(game.board, 1) == std::vector<std::string>{"S"});
  CHECK(action_from_json(*game.env, action_to_json(*game.env, a)) == a);
  CHECK(action_from_json(*game.env, json("N:attack(E)")) == a);
  CHECK_THROWS_AS(game.env->parse_action("N:fly(E)"), ConfigError);
  CHECK_THROWS_AS(game.env->parse_action("X:hold"), ConfigError);
  CHECK_THROWS_AS(game.env->parse_action("N:reinforce(two)"), ConfigError);

  const json round = board_to_json(game.board);
  json again = j;
  again["territories"] = round["territories"];
  CHECK(game_from_json(again).board == game.board);
  CHECK_THROWS_AS(game_from_json(json::parse(R"({"territories": [{"id": "A", "owner": 0, "armies": 0}]})")), ConfigError);
  CHECK_THROWS_AS(game_from_json(json::parse(R"({"agents": 2})")), ConfigError);

  // Counterfactual plumbing: similarity over territories.
  const auto b2 = game.env->parse_action("N:support(E)");
  CHECK(order_similarity(*game.env, a, b2) == 0.0);
  CHECK(order_similarity(*game.env, a, a) == 1.0);
}

TEST_CASE("two-player SICA is exactly anti-correlated") {
  const auto b = board(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}, {0, 0, N, 1, 1, N}, {3, 2, 1, 3, 2, 1});
  // Rows at different depths carry different discounts, so beyond d = 1 the
  // utilities only sum to a constant when gamma = 1.
  for (auto [gamma, d] : {std::pair{0.95, 1}, std::pair{1.0, 3}}) {
    SkirmishConfig c;
    c.discount = gamma;
    auto game = make_game(c, b, {PolicyKind::uniform, PolicyKind::heuristic});
    const auto m = sica(game.model, b, 500, d, SeededRng(17));
    REQUIRE_FALSE(m.any_degenerate());
    CHECK(std::abs(m(0, 1) + 1.0) <= 1e-9);
  }
}

TEST_CASE("counterfactual head with alpha zero is the utility argmax") {
  // Two units for agent 0; a deterministic opponent makes utilities exact.
  const auto b = board(4, {{0, 1}, {1, 2}, {2, 3}}, {0, 0, 1, N}, {3, 2, 2, 0});
  auto game = make_game(SkirmishConfig{}, b, {PolicyKind::uniform, PolicyKind::hold});
  const auto& env = *game.env;
  CounterfactualQuery<SkirmishAction> q;
  q.reference = hold_all(b, 0);
  CounterfactualParams params;
  params.alpha = 0.0;
  params.samples = 50;
  params.utility_samples = 1;
  const auto res = counterfactuals(game.model, b, 0, q, params, SeededRng(2));
  REQUIRE(!res.ranked.empty());
  double best = -1;
  const auto legal = env.legal_actions(b, 0);
  for (const auto& a : *legal) {
    if (a == q.reference) continue;
    const std::vector<SkirmishAction> joint{a, hold_all(b, 1)};
    best = std::max(best, game.env->discount() * heuristic_value(env.most_probable_transition(b, joint), 2)[0]);
  }
  CHECK(res.ranked[0].expected_own_utility == doctest::Approx(best).epsilon(1e-12));
}
