#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmx/core/explain.hpp"
#include "mmx/core/json_text.hpp"

// Skirmish: a small conquest game on a territory graph. Every agent issues
// one order per owned territory and all orders resolve simultaneously.
namespace mmx::skirmish {

inline constexpr AgentId kNeutral = -1;

struct SkirmishMap {
  std::vector<std::string> ids;
  std::vector<std::vector<int>> adjacent;  // sorted territory indices

  int size() const { return static_cast<int>(ids.size()); }
  int index_of(const std::string& id) const;  // throws ConfigError
  bool adjacent_to(int a, int b) const;
};

struct SkirmishBoard {
  std::shared_ptr<const SkirmishMap> map;
  std::vector<AgentId> owner;  // kNeutral or an agent
  std::vector<int> armies;
  int turn = 0;

  bool operator==(const SkirmishBoard& o) const {
    return (map == o.map || (map && o.map && map->ids == o.map->ids && map->adjacent == o.map->adjacent)) &&
           owner == o.owner && armies == o.armies && turn == o.turn;
  }

  int owned_count(AgentId agent) const;
  std::vector<int> owned(AgentId agent) const;
};

enum class OrderKind { hold, reinforce, attack, support };

struct UnitOrder {
  int territory = 0;
  OrderKind kind = OrderKind::hold;
  int target = -1;  // attack and support
  int amount = 0;   // reinforce

  bool operator==(const UnitOrder&) const = default;
};

// One order per owned territory, sorted by territory index. Eliminated
// agents play the empty action.
struct SkirmishAction {
  std::vector<UnitOrder> orders;

  bool operator==(const SkirmishAction&) const = default;
};

struct SkirmishConfig {
  int agents = 2;
  double territory_weight = 0.7;
  double army_weight = 0.3;
  double discount = 0.95;
  int max_turns = 10;
  // Combat succeeds with probability A / (A + D) instead of whenever A > D.
  bool stochastic = false;
  // One agent acts per step (the others hold), so one simulation step is a
  // single agent's move rather than a full simultaneous turn.
  bool sequential_turns = false;
  double enumeration_limit = 1e5;

  void validate() const;
};

// max(1, owned / 3).
int reinforcement_budget(const SkirmishBoard& b, AgentId agent);

// Per agent: w1 * territory share + w2 * army share, each share over the
// territories and armies held by agents (neutral ones excluded). Equal
// split when nobody holds anything.
UtilityVector heuristic_value(const SkirmishBoard& b, int agents, double territory_weight = 0.7, double army_weight = 0.3);

struct ActionSpace {
  std::vector<SkirmishAction> actions;  // filled only when enumerated
  std::vector<std::vector<UnitOrder>> options;  // per owned territory, before the budget check
  double product = 1.0;  // product of per-territory option counts
  bool enumerated = false;  // false means the set is too large; sample instead
  bool eliminated = false;
};

class SkirmishEnv final : public Environment<SkirmishBoard, SkirmishAction> {
 public:
  SkirmishEnv(SkirmishConfig config, std::shared_ptr<const SkirmishMap> map);

  int num_agents() const override { return config_.agents; }
  double discount() const override { return config_.discount; }
  bool is_terminal(const SkirmishBoard& b) const override;
  SkirmishBoard transition(const SkirmishBoard& b, std::span<const SkirmishAction> joint, Rng& rng) const override;
  SkirmishBoard most_probable_transition(const SkirmishBoard& b, std::span<const SkirmishAction> joint) const override;
  // The horizon payoff enters through the heuristic value, so steps pay 0.
  UtilityVector reward(const SkirmishBoard& prev, const SkirmishBoard& next) const override;
  bool is_legal(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const override;
  std::optional<std::vector<SkirmishAction>> legal_actions(const SkirmishBoard& b, AgentId agent) const override;
  std::string encode(const SkirmishAction& a) const override;
  std::vector<SubOrder> sub_orders(const SkirmishAction& a) const override;
  std::optional<std::vector<std::string>> units(const SkirmishBoard& b, AgentId agent) const override;

  // Throws IllegalActionError naming the offending territory.
  void check_legal(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const;

  // Orders available to one territory, ignoring the shared budget.
  std::vector<UnitOrder> order_options(const SkirmishBoard& b, AgentId agent, int territory) const;
  ActionSpace action_space(const SkirmishBoard& b, AgentId agent) const;

  // Applies orders; combat outcomes come from `rng` in stochastic mode.
  SkirmishBoard adjudicate(const SkirmishBoard& b, std::span<const SkirmishAction> joint, Rng* rng) const;

  // False for agents waiting their turn in sequential mode.
  bool acts(const SkirmishBoard& b, AgentId agent) const;

  std::string encode_order(const UnitOrder& o) const;
  // Parses "T1:hold;T2:attack(T3);T4:reinforce(2);T5:support(T2)" or "none".
  SkirmishAction parse_action(const std::string& text) const;

  const SkirmishConfig& config() const { return config_; }
  const std::shared_ptr<const SkirmishMap>& map() const { return map_; }

 private:
  SkirmishConfig config_;
  std::shared_ptr<const SkirmishMap> map_;
};

// V(s) = heuristic_value(s), terminal states included.
class HeuristicValue final : public ValueFunction<SkirmishBoard> {
 public:
  explicit HeuristicValue(SkirmishConfig config) : config_(config) {}
  UtilityVector evaluate(const SkirmishBoard& b, Rng& rng) const override;

 private:
  SkirmishConfig config_;
};

// Uniform over legal actions. Large action sets are sampled unit by unit
// with rejection of budget-infeasible draws, which stays uniform.
class UniformPolicy final : public Policy<SkirmishBoard, SkirmishAction> {
 public:
  explicit UniformPolicy(std::shared_ptr<const SkirmishEnv> env) : env_(std::move(env)) {}
  SkirmishAction sample(const SkirmishBoard& b, AgentId agent, Rng& rng) const override;
  std::optional<double> prob(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const override;

 private:
  std::shared_ptr<const SkirmishEnv> env_;
};

// Per-territory softmax over rule-of-thumb order scores (attack weak
// neighbors, reinforce the border), drawn independently per unit with
// budget rejection.
class HeuristicPolicy final : public Policy<SkirmishBoard, SkirmishAction> {
 public:
  HeuristicPolicy(std::shared_ptr<const SkirmishEnv> env, double temperature = 1.0);
  SkirmishAction sample(const SkirmishBoard& b, AgentId agent, Rng& rng) const override;
  std::optional<SkirmishAction> mode(const SkirmishBoard& b, AgentId agent) const override;

  double order_score(const SkirmishBoard& b, AgentId agent, const UnitOrder& o) const;

 private:
  std::shared_ptr<const SkirmishEnv> env_;
  double temperature_;
};

// Every agent holds everywhere.
class HoldPolicy final : public Policy<SkirmishBoard, SkirmishAction> {
 public:
  SkirmishAction sample(const SkirmishBoard& b, AgentId agent, Rng& rng) const override;
  std::optional<double> prob(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const override;
  std::optional<SkirmishAction> mode(const SkirmishBoard& b, AgentId agent) const override;
};

SkirmishAction hold_all(const SkirmishBoard& b, AgentId agent);

using SkirmishModel = GameModel<SkirmishBoard, SkirmishAction>;

struct SkirmishGame {
  std::shared_ptr<const SkirmishEnv> env;
  SkirmishBoard board;
  SkirmishModel model;
  std::vector<std::string> agent_names;
};

enum class PolicyKind { uniform, heuristic, hold };

// Board file: {territories:[{id, owner, armies, adjacent:[...]}], agents,
// weights:{territory, army}, discount, max_turns, stochastic,
// sequential_turns, policies:["heuristic", ...], temperature}.
SkirmishGame game_from_json(const json& j);
SkirmishGame make_game(SkirmishConfig config, SkirmishBoard board, std::vector<PolicyKind> policies,
                       double temperature = 1.0);

// Validates and builds a board; adjacency is checked for symmetry and
// connectivity.
SkirmishBoard make_board(const std::vector<std::string>& ids, const std::vector<std::vector<std::string>>& adjacent,
                         const std::vector<AgentId>& owner, const std::vector<int>& armies, int agents);

json board_to_json(const SkirmishBoard& b);
// {"orders":{"T1":"hold","T2":"attack(T3)"}, "encoding":"..."}.
json action_to_json(const SkirmishEnv& env, const SkirmishAction& a);
// Accepts the object above or an encoding string.
SkirmishAction action_from_json(const SkirmishEnv& env, const json& j);

}  // namespace mmx::skirmish
