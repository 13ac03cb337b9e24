#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mmx/core/environment.hpp"
#include "mmx/core/json_text.hpp"
#include "mmx/core/parallel.hpp"
#include "mmx/core/utility.hpp"

namespace mmx {

template <class A>
struct PinnedAction {
  AgentId agent = 0;
  A action{};
  int depth = 0;
};

// The constraint set injected into rollouts: at most one pin per
// (agent, depth).
template <class A>
class PinnedActionSet {
 public:
  PinnedActionSet() = default;

  PinnedActionSet& add(AgentId agent, A action, int depth = 0) {
    if (agent < 0) throw ConfigError("pinned agent index must be non-negative");
    if (depth < 0) throw ConfigError("pin depth must be non-negative");
    for (const auto& e : entries_)
      if (e.agent == agent && e.depth == depth)
        throw ConfigError("duplicate pin for " + agent_label(agent) + " at depth " + std::to_string(depth));
    entries_.push_back({agent, std::move(action), depth});
    return *this;
  }

  const std::vector<PinnedAction<A>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const A* find(AgentId agent, int depth) const {
    for (const auto& e : entries_)
      if (e.agent == agent && e.depth == depth) return &e.action;
    return nullptr;
  }

  bool pins_agent_at(AgentId agent, int depth) const { return find(agent, depth) != nullptr; }

  int max_depth() const {
    int m = -1;
    for (const auto& e : entries_) m = std::max(m, e.depth);
    return m;
  }

 private:
  std::vector<PinnedAction<A>> entries_;
};

struct SimulationOptions {
  int workers = 1;
  // When set, one JSON line per step {sim, depth, joint_action, reward} is
  // written here after all rollouts finish, ordered by (sim, depth).
  std::ostream* trace = nullptr;
};

// Draws a ~ pi for every agent and then overwrites pinned agents. Every
// policy draw is consumed even when it is overwritten, so the stream
// position does not depend on the pin set.
template <class S, class A>
std::vector<A> draw_joint_action(const GameModel<S, A>& model, const S& s, int depth, const PinnedActionSet<A>& pins,
                                 Rng& rng) {
  const int p = model.num_agents();
  std::vector<A> joint;
  joint.reserve(static_cast<std::size_t>(p));
  for (AgentId i = 0; i < p; ++i) joint.push_back(model.policies[static_cast<std::size_t>(i)]->sample(s, i, rng));
  for (const auto& pin : pins.entries()) {
    if (pin.depth != depth) continue;
    if (pin.agent >= p) throw ConstraintViolation("pin names " + agent_label(pin.agent) + " but the game has " + std::to_string(p) + " agents");
    if (!model.env->is_legal(s, pin.agent, pin.action))
      throw ConstraintViolation("pinned action '" + model.env->encode(pin.action) + "' is illegal for " +
                                agent_label(pin.agent) + " at depth " + std::to_string(depth));
    joint[static_cast<std::size_t>(pin.agent)] = pin.action;
  }
  return joint;
}

// k independent rollouts of depth d from s. Rollout j draws from
// seed.stream(j); the result is identical for any worker count. If a rollout
// reaches a terminal state, the remaining steps repeat it with zero reward.
template <class S, class A>
UtilityMatrix simulate(const GameModel<S, A>& model, const S& s, int k, int d, const PinnedActionSet<A>& pins,
                       SeededRng seed, const SimulationOptions& options = {}) {
  model.validate();
  if (k < 1) throw ConfigError("simulate needs k >= 1");
  if (d < 1) throw ConfigError("simulate needs depth d >= 1");
  if (pins.max_depth() >= d) throw ConfigError("pin depth must be smaller than the rollout depth");
  const auto& env = *model.env;
  if (env.is_terminal(s)) throw ConfigError("cannot simulate from a terminal state");

  const int p = env.num_agents();
  const double gamma = env.discount();
  UtilityMatrix x(static_cast<std::size_t>(k) * static_cast<std::size_t>(d), static_cast<std::size_t>(p));
  std::vector<std::string> traces(options.trace ? static_cast<std::size_t>(k) : 0);

  parallel_for(static_cast<std::size_t>(k), options.workers, [&](std::size_t j) {
    Rng rng = seed.stream(j);
    S state = s;
    UtilityVector cumulative(static_cast<std::size_t>(p), 0.0);
    double discount_t = 1.0;  // γ^t
    for (int t = 0; t < d; ++t) {
      const std::size_t row = j * static_cast<std::size_t>(d) + static_cast<std::size_t>(t);
      if (env.is_terminal(state)) {
        const UtilityVector v = model.values->evaluate(state, rng);
        const UtilityVector u = combine_utility(discount_t * gamma, v, cumulative);
        std::copy(u.begin(), u.end(), x.row(row).begin());
        discount_t *= gamma;
        continue;
      }
      std::vector<A> joint = draw_joint_action(model, state, t, pins, rng);
      S next = env.transition(state, joint, rng);
      const UtilityVector r = env.reward(state, next);
      if (r.size() != static_cast<std::size_t>(p)) throw DimensionError("reward vector length does not match agents");
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i])) throw EstimationError("non-finite reward for " + agent_label(static_cast<AgentId>(i)));
        cumulative[i] += discount_t * r[i];
      }
      const UtilityVector v = model.values->evaluate(next, rng);
      if (v.size() != static_cast<std::size_t>(p)) throw DimensionError("value vector length does not match agents");
      const UtilityVector u = combine_utility(discount_t * gamma, v, cumulative);
      std::copy(u.begin(), u.end(), x.row(row).begin());
      if (options.trace) {
        json line;
        line["sim"] = j;
        line["depth"] = t;
        json actions = json::array();
        for (const auto& a : joint) actions.push_back(env.encode(a));
        line["joint_action"] = std::move(actions);
        line["reward"] = r;
        traces[j] += to_json_text(line, -1);
        traces[j] += '\n';
      }
      state = std::move(next);
      discount_t *= gamma;
    }
  });

  if (options.trace)
    for (const auto& t : traces) *options.trace << t;
  return x;
}

// Mean and sample standard deviation of each column of an unconstrained
// simulation.
template <class S, class A>
BaselineMoments baseline_moments(const GameModel<S, A>& model, const S& s, int k, int d, SeededRng seed,
                                 const SimulationOptions& options = {}) {
  if (k < 2) throw ConfigError("baseline moments need k >= 2");
  return column_moments(simulate(model, s, k, d, PinnedActionSet<A>{}, seed, options));
}

}  // namespace mmx
