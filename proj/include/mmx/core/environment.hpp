#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmx/core/rng.hpp"
#include "mmx/core/types.hpp"

namespace mmx {

// One unit's part of a combinatorial action, in canonical text form.
struct SubOrder {
  std::string unit;
  std::string order;

  auto operator<=>(const SubOrder&) const = default;
};

// A p-agent game: states S, per-agent actions A, joint transition, and
// reward vectors. Implementations must be safe to call concurrently from
// several rollout workers (all methods are const and must not mutate shared
// state).
template <class S, class A>
class Environment {
 public:
  using State = S;
  using Action = A;

  virtual ~Environment() = default;

  virtual int num_agents() const = 0;
  virtual double discount() const = 0;
  virtual bool is_terminal(const S& s) const = 0;

  // Chance, if any, is drawn from `rng`. Deterministic games ignore it.
  virtual S transition(const S& s, std::span<const A> joint, Rng& rng) const = 0;

  // The single most likely successor. Deterministic games use `transition`.
  virtual S most_probable_transition(const S& s, std::span<const A> joint) const {
    Rng unused(0);
    return transition(s, joint, unused);
  }

  virtual UtilityVector reward(const S& prev, const S& next) const = 0;

  virtual bool is_legal(const S& s, AgentId agent, const A& action) const = 0;

  // Exhaustive legal set when the game can enumerate it cheaply.
  virtual std::optional<std::vector<A>> legal_actions(const S& /*s*/, AgentId /*agent*/) const { return std::nullopt; }

  // Canonical serialized text; ties between actions are broken by byte
  // order of this string.
  virtual std::string encode(const A& action) const = 0;

  // Unit decomposition used by counterfactual queries. Games without
  // multi-unit structure expose the whole action as one unit.
  virtual std::vector<SubOrder> sub_orders(const A& action) const { return {{"action", encode(action)}}; }

  // Units the agent may constrain in `s`; nullopt means "not checked".
  virtual std::optional<std::vector<std::string>> units(const S& /*s*/, AgentId /*agent*/) const {
    return std::nullopt;
  }
};

template <class S, class A>
class Policy {
 public:
  virtual ~Policy() = default;

  // Must return a legal action.
  virtual A sample(const S& s, AgentId agent, Rng& rng) const = 0;

  // Exact probability when the policy can compute it.
  virtual std::optional<double> prob(const S& /*s*/, AgentId /*agent*/, const A& /*action*/) const {
    return std::nullopt;
  }

  // Greedy (temperature 0) action when available.
  virtual std::optional<A> mode(const S& /*s*/, AgentId /*agent*/) const { return std::nullopt; }

  // True for policies whose modal action can only be obtained by greedy
  // decoding (e.g. language-model policies). Probable-action explanations
  // then use `mode` and are tagged as possibly unrepresentative.
  virtual bool greedy_decode_only() const { return false; }
};

template <class S>
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;

  // Vector form V(s). Monte Carlo value functions draw from `rng`.
  virtual UtilityVector evaluate(const S& s, Rng& rng) const = 0;

  double evaluate(const S& s, AgentId agent, Rng& rng) const { return evaluate(s, rng).at(static_cast<std::size_t>(agent)); }
};

template <class S>
class ZeroValue final : public ValueFunction<S> {
 public:
  explicit ZeroValue(int num_agents) : num_agents_(num_agents) {}
  UtilityVector evaluate(const S&, Rng&) const override { return UtilityVector(static_cast<std::size_t>(num_agents_), 0.0); }

 private:
  int num_agents_;
};

// Everything a rollout needs: the game, one policy per agent, and V.
template <class S, class A>
struct GameModel {
  std::shared_ptr<const Environment<S, A>> env;
  std::vector<std::shared_ptr<const Policy<S, A>>> policies;
  std::shared_ptr<const ValueFunction<S>> values;

  int num_agents() const { return env->num_agents(); }

  void validate() const {
    if (!env || !values) throw ConfigError("game model is missing an environment or value function");
    if (env->num_agents() < 2) throw ConfigError("a game needs at least two agents");
    if (policies.size() != static_cast<std::size_t>(env->num_agents()))
      throw ConfigError("expected " + std::to_string(env->num_agents()) + " policies, got " +
                        std::to_string(policies.size()));
    for (const auto& p : policies)
      if (!p) throw ConfigError("null policy in game model");
    const double g = env->discount();
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  }
};

}  // namespace mmx
