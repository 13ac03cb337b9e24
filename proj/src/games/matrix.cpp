#include "mmx/games/matrix.hpp"

#include <cmath>
#include <numeric>

namespace mmx::matrix {

MatrixGame::MatrixGame(std::vector<int> actions_per_agent, std::vector<UtilityVector> payoffs, double discount)
    : actions_(std::move(actions_per_agent)), payoffs_(std::move(payoffs)), discount_(discount) {
  if (actions_.size() < 2) throw ConfigError("matrix game needs at least two agents");
  std::size_t cells = 1;
  for (int n : actions_) {
    if (n < 1) throw ConfigError("every agent needs at least one action");
    cells *= static_cast<std::size_t>(n);
  }
  if (payoffs_.size() != cells)
    throw ConfigError("payoff tensor has " + std::to_string(payoffs_.size()) + " cells, expected " + std::to_string(cells));
  for (const auto& cell : payoffs_) {
    if (cell.size() != actions_.size()) throw ConfigError("payoff cell length must equal the number of agents");
    for (double v : cell)
      if (!std::isfinite(v)) throw ConfigError("payoffs must be finite");
  }
  if (!(discount_ >= 0.0 && discount_ <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
}

std::size_t MatrixGame::flat_index(std::span<const int> joint) const {
  if (joint.size() != actions_.size()) throw DimensionError("joint action length must equal the number of agents");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (joint[i] < 0 || joint[i] >= actions_[i]) throw IllegalActionError("action out of range for " + agent_label(static_cast<AgentId>(i)));
    idx = idx * static_cast<std::size_t>(actions_[i]) + static_cast<std::size_t>(joint[i]);
  }
  return idx;
}

std::vector<int> MatrixGame::unflatten(std::size_t index) const {
  std::vector<int> joint(actions_.size());
  for (std::size_t i = actions_.size(); i-- > 0;) {
    joint[i] = static_cast<int>(index % static_cast<std::size_t>(actions_[i]));
    index /= static_cast<std::size_t>(actions_[i]);
  }
  return joint;
}

MatrixState MatrixGame::transition(const MatrixState& s, std::span<const MatrixAction> joint, Rng&) const {
  if (s.done) throw IllegalActionError("matrix game already played");
  (void)flat_index(joint);
  return {true, std::vector<int>(joint.begin(), joint.end())};
}

UtilityVector MatrixGame::reward(const MatrixState& prev, const MatrixState& next) const {
  if (prev.done || !next.done) return UtilityVector(actions_.size(), 0.0);
  return payoff(next.joint);
}

bool MatrixGame::is_legal(const MatrixState& s, AgentId agent, const MatrixAction& a) const {
  return !s.done && agent >= 0 && agent < num_agents() && a >= 0 && a < actions_[static_cast<std::size_t>(agent)];
}

std::optional<std::vector<MatrixAction>> MatrixGame::legal_actions(const MatrixState& s, AgentId agent) const {
  std::vector<MatrixAction> out;
  if (s.done) return out;
  out.resize(static_cast<std::size_t>(actions_.at(static_cast<std::size_t>(agent))));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::string MatrixGame::encode(const MatrixAction& a) const { return std::to_string(a); }

MixedPolicy::MixedPolicy(std::vector<std::vector<double>> per_agent) : probs_(std::move(per_agent)) {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    double total = 0.0;
    for (double p : probs_[i]) {
      if (!(p >= 0.0)) throw ConfigError("mixed policy probabilities must be non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError("mixed policy for " + agent_label(static_cast<AgentId>(i)) + " does not sum to 1");
  }
}

MatrixAction MixedPolicy::sample(const MatrixState&, AgentId agent, Rng& rng) const {
  return static_cast<MatrixAction>(rng.categorical(probs_.at(static_cast<std::size_t>(agent))));
}

std::optional<double> MixedPolicy::prob(const MatrixState&, AgentId agent, const MatrixAction& a) const {
  const auto& p = probs_.at(static_cast<std::size_t>(agent));
  if (a < 0 || static_cast<std::size_t>(a) >= p.size()) return 0.0;
  return p[static_cast<std::size_t>(a)];
}

std::optional<MatrixAction> MixedPolicy::mode(const MatrixState&, AgentId agent) const {
  const auto& p = probs_.at(static_cast<std::size_t>(agent));
  return static_cast<MatrixAction>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace {

// Probability of each joint action, pinned agents as point masses.
std::vector<double> joint_distribution(const MatrixGame& g, const std::vector<std::vector<double>>& policies,
                                       const PinnedActionSet<MatrixAction>& pinned) {
  const auto p = static_cast<std::size_t>(g.num_agents());
  if (policies.size() != p) throw DimensionError("one policy per agent required");
  std::vector<std::vector<double>> marginals = policies;
  for (std::size_t i = 0; i < p; ++i)
    if (marginals[i].size() != static_cast<std::size_t>(g.actions_per_agent()[i]))
      throw DimensionError("policy length mismatch for " + agent_label(static_cast<AgentId>(i)));
  for (const auto& pin : pinned.entries()) {
    if (!g.is_legal(g.initial_state(), pin.agent, pin.action)) throw ConstraintViolation("pinned action is illegal");
    auto& m = marginals[static_cast<std::size_t>(pin.agent)];
    std::fill(m.begin(), m.end(), 0.0);
    m[static_cast<std::size_t>(pin.action)] = 1.0;
  }
  std::vector<double> weights(g.num_joint_actions());
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const std::vector<int> joint = g.unflatten(n);
    double w = 1.0;
    for (std::size_t i = 0; i < p; ++i) w *= marginals[i][static_cast<std::size_t>(joint[i])];
    weights[n] = w;
  }
  return weights;
}

}  // namespace

UtilityVector exact_expected_utility(const MatrixGame& g, const std::vector<std::vector<double>>& policies,
                                     const PinnedActionSet<MatrixAction>& pinned) {
  const std::vector<double> weights = joint_distribution(g, policies, pinned);
  UtilityVector out(static_cast<std::size_t>(g.num_agents()), 0.0);
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] == 0.0) continue;
    const auto& cell = g.payoff_at(n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[n] * cell[i];
  }
  return out;
}

RelationMatrix exact_relation_matrix(const MatrixGame& g, const std::vector<std::vector<double>>& policies) {
  const std::vector<double> weights = joint_distribution(g, policies, {});
  std::vector<std::vector<double>> outcomes(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) outcomes[n] = g.payoff_at(n);
  return weighted_pearson(outcomes, weights);
}

GameModel<MatrixState, MatrixAction> make_model(std::shared_ptr<const MatrixGame> g,
                                                const std::vector<std::vector<double>>& policies) {
  GameModel<MatrixState, MatrixAction> model;
  const int p = g->num_agents();
  auto policy = std::make_shared<const MixedPolicy>(policies);
  model.policies.assign(static_cast<std::size_t>(p), policy);
  model.values = std::make_shared<const ZeroValue<MatrixState>>(p);
  model.env = std::move(g);
  return model;
}

RandomInstance random_instance(int num_agents, int actions_each, Rng& rng, double lo, double hi) {
  std::vector<int> actions(static_cast<std::size_t>(num_agents), actions_each);
  std::size_t cells = 1;
  for (int n : actions) cells *= static_cast<std::size_t>(n);
  std::vector<UtilityVector> payoffs(cells, UtilityVector(static_cast<std::size_t>(num_agents)));
  for (auto& cell : payoffs)
    for (double& v : cell) v = lo + (hi - lo) * rng.uniform01();
  std::vector<std::vector<double>> policies(static_cast<std::size_t>(num_agents));
  for (auto& pol : policies) {
    pol.resize(static_cast<std::size_t>(actions_each));
    double total = 0.0;
    for (double& w : pol) {
      w = 0.2 + rng.uniform01();
      total += w;
    }
    for (double& w : pol) w /= total;
    // Renormalize the last entry so the vector sums to 1 within rounding.
    double head = 0.0;
    for (std::size_t a = 0; a + 1 < pol.size(); ++a) head += pol[a];
    pol.back() = 1.0 - head;
  }
  return {std::make_shared<const MatrixGame>(std::move(actions), std::move(payoffs)), std::move(policies)};
}

namespace {

void flatten_payoffs(const json& node, std::size_t depth, std::size_t p, std::vector<UtilityVector>& out) {
  if (depth == p) {
    if (!node.is_array() || node.size() != p) throw ConfigError("payoff cell must be an array of " + std::to_string(p) + " numbers");
    UtilityVector cell;
    for (const auto& v : node) cell.push_back(v.get<double>());
    out.push_back(std::move(cell));
    return;
  }
  if (!node.is_array()) throw ConfigError("payoffs must be nested arrays");
  for (const auto& child : node) flatten_payoffs(child, depth + 1, p, out);
}

json nest_payoffs(const MatrixGame& g, std::size_t depth, std::size_t& cursor) {
  const auto p = static_cast<std::size_t>(g.num_agents());
  if (depth == p) return g.payoff_at(cursor++);
  json arr = json::array();
  for (int a = 0; a < g.actions_per_agent()[depth]; ++a) arr.push_back(nest_payoffs(g, depth + 1, cursor));
  return arr;
}

}  // namespace

LoadedGame from_json(const json& j) {
  try {
    const auto actions = j.at("actions_per_agent").get<std::vector<int>>();
    std::vector<UtilityVector> payoffs;
    flatten_payoffs(j.at("payoffs"), 0, actions.size(), payoffs);
    const double discount = j.value("discount", 1.0);
    LoadedGame out;
    out.game = std::make_shared<const MatrixGame>(actions, std::move(payoffs), discount);
    if (j.contains("policies")) {
      out.policies = j.at("policies").get<std::vector<std::vector<double>>>();
      MixedPolicy check(out.policies);
      if (out.policies.size() != actions.size()) throw ConfigError("one policy per agent required");
    } else {
      for (int n : actions) out.policies.emplace_back(static_cast<std::size_t>(n), 1.0 / n);
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed matrix game: ") + e.what());
  }
}

json to_json(const MatrixGame& g, const std::vector<std::vector<double>>& policies) {
  std::size_t cursor = 0;
  return {{"actions_per_agent", g.actions_per_agent()},
          {"payoffs", nest_payoffs(g, 0, cursor)},
          {"policies", policies},
          {"discount", g.discount()}};
}

}  // namespace mmx::matrix
