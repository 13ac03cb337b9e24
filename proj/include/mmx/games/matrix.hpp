#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmx/core/explain.hpp"
#include "mmx/core/json_text.hpp"

namespace mmx::matrix {

// Single-round state. `joint` holds the played joint action once done.
struct MatrixState {
  bool done = false;
  std::vector<int> joint;

  bool operator==(const MatrixState&) const = default;
};

using MatrixAction = int;

// n-player normal-form game with a dense payoff tensor. Immutable after
// construction.
class MatrixGame final : public Environment<MatrixState, MatrixAction> {
 public:
  // payoffs[flat joint index] is a vector of length p; the joint index is
  // row-major with agent 0 most significant.
  MatrixGame(std::vector<int> actions_per_agent, std::vector<UtilityVector> payoffs, double discount = 1.0);

  int num_agents() const override { return static_cast<int>(actions_.size()); }
  double discount() const override { return discount_; }
  bool is_terminal(const MatrixState& s) const override { return s.done; }
  MatrixState transition(const MatrixState& s, std::span<const MatrixAction> joint, Rng& rng) const override;
  UtilityVector reward(const MatrixState& prev, const MatrixState& next) const override;
  bool is_legal(const MatrixState& s, AgentId agent, const MatrixAction& a) const override;
  std::optional<std::vector<MatrixAction>> legal_actions(const MatrixState& s, AgentId agent) const override;
  std::string encode(const MatrixAction& a) const override;

  const std::vector<int>& actions_per_agent() const { return actions_; }
  std::size_t num_joint_actions() const { return payoffs_.size(); }
  std::size_t flat_index(std::span<const int> joint) const;
  std::vector<int> unflatten(std::size_t index) const;
  const UtilityVector& payoff(std::span<const int> joint) const { return payoffs_[flat_index(joint)]; }
  const UtilityVector& payoff_at(std::size_t flat) const { return payoffs_[flat]; }

  MatrixState initial_state() const { return {}; }

 private:
  std::vector<int> actions_;
  std::vector<UtilityVector> payoffs_;
  double discount_;
};

// Per-agent probability vector over that agent's actions.
class MixedPolicy final : public Policy<MatrixState, MatrixAction> {
 public:
  explicit MixedPolicy(std::vector<std::vector<double>> per_agent);

  MatrixAction sample(const MatrixState& s, AgentId agent, Rng& rng) const override;
  std::optional<double> prob(const MatrixState& s, AgentId agent, const MatrixAction& a) const override;
  std::optional<MatrixAction> mode(const MatrixState& s, AgentId agent) const override;

  const std::vector<double>& distribution(AgentId agent) const { return probs_.at(static_cast<std::size_t>(agent)); }

 private:
  std::vector<std::vector<double>> probs_;
};

// Expectation by full enumeration of the joint action space, with pinned
// agents replaced by point masses.
UtilityVector exact_expected_utility(const MatrixGame& g, const std::vector<std::vector<double>>& policies,
                                     const PinnedActionSet<MatrixAction>& pinned);

// Population Pearson matrix of the exact joint outcome distribution.
RelationMatrix exact_relation_matrix(const MatrixGame& g, const std::vector<std::vector<double>>& policies);

// A model where each agent plays its row of `policies` and V = 0.
GameModel<MatrixState, MatrixAction> make_model(std::shared_ptr<const MatrixGame> g,
                                                const std::vector<std::vector<double>>& policies);

// Uniform random payoffs in [lo, hi) and random interior mixed policies.
struct RandomInstance {
  std::shared_ptr<const MatrixGame> game;
  std::vector<std::vector<double>> policies;
};
RandomInstance random_instance(int num_agents, int actions_each, Rng& rng, double lo = -10.0, double hi = 10.0);

// {actions_per_agent, payoffs: nested arrays, policies?, discount?}
struct LoadedGame {
  std::shared_ptr<const MatrixGame> game;
  std::vector<std::vector<double>> policies;  // uniform when absent
};
LoadedGame from_json(const json& j);
json to_json(const MatrixGame& g, const std::vector<std::vector<double>>& policies);

}  // namespace mmx::matrix
