#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmx/core/relations.hpp"
#include "mmx/core/simulate.hpp"

namespace mmx {

struct SbueExplanation {
  UtilityVector expected_utility;
  std::optional<UtilityVector> standardized;
  std::vector<bool> degenerate;  // set only with standardization
  std::size_t k_used = 0;
};

// Expected utility of every agent when the pinned actions are played at
// depth 0 and everyone else follows their policy. With standardization the
// samples are z-scored against `baseline` before averaging.
template <class S, class A>
SbueExplanation sbue(const GameModel<S, A>& model, const S& s, const PinnedActionSet<A>& explained, int k,
                     bool standardize, const std::optional<BaselineMoments>& baseline, SeededRng seed,
                     const SimulationOptions& options = {}) {
  if (explained.empty()) throw ConfigError("SBUE needs at least one explained action");
  for (const auto& e : explained.entries())
    if (e.depth != 0) throw ConfigError("SBUE explains actions taken now; pins must have depth 0");
  if (standardize && !baseline) throw ConfigError("standardized SBUE needs baseline moments");
  const UtilityMatrix x = simulate(model, s, k, 1, explained, seed, options);
  SbueExplanation out;
  out.k_used = static_cast<std::size_t>(k);
  out.expected_utility = column_means(x);
  if (standardize) {
    Standardized z = zscore_standardize(x, *baseline);
    out.standardized = column_means(z.values);
    out.degenerate = std::move(z.degenerate);
  }
  return out;
}

// SICA: Pearson correlation over the columns of an unconstrained simulation.
template <class S, class A>
RelationMatrix sica(const GameModel<S, A>& model, const S& s, int k, int d, SeededRng seed,
                    const SimulationOptions& options = {}) {
  if (static_cast<long>(k) * d < 2) throw ConfigError("SICA needs k*d >= 2 samples");
  RelationMatrix m = pearson_columns(simulate(model, s, k, d, PinnedActionSet<A>{}, seed, options));
  m.k_used = static_cast<std::size_t>(k);
  m.d_used = static_cast<std::size_t>(d);
  return m;
}

template <class A>
struct ModalAction {
  A action{};
  std::string encoding;
  double frequency = 0.0;
  // Every distinct sampled action with its empirical frequency, by encoding.
  std::vector<std::pair<std::string, double>> histogram;
};

template <class A>
struct ProbableActions {
  // Empty for pinned agents.
  std::vector<std::optional<ModalAction<A>>> per_agent;
  std::size_t k_used = 0;
  bool greedy_decode = false;
  std::string note;
};

namespace detail {

template <class A>
ModalAction<A> modal_from_counts(const std::map<std::string, std::pair<A, std::size_t>>& counts, std::size_t total) {
  ModalAction<A> out;
  std::size_t best = 0;
  // std::map iterates in byte order, so the first maximum is the smallest
  // encoding among ties.
  for (const auto& [enc, entry] : counts) {
    const double f = static_cast<double>(entry.second) / static_cast<double>(total);
    out.histogram.emplace_back(enc, f);
    if (entry.second > best) {
      best = entry.second;
      out.action = entry.first;
      out.encoding = enc;
      out.frequency = f;
    }
  }
  return out;
}

}  // namespace detail

// Most frequent action of every non-pinned agent over k one-step draws with
// the explained actions pinned.
template <class S, class A>
ProbableActions<A> probable_actions(const GameModel<S, A>& model, const S& s, const PinnedActionSet<A>& explained,
                                    int k, SeededRng seed, const SimulationOptions& options = {}) {
  model.validate();
  if (k < 1) throw ConfigError("probable actions need k >= 1");
  const auto& env = *model.env;
  const int p = env.num_agents();
  ProbableActions<A> out;
  out.per_agent.resize(static_cast<std::size_t>(p));
  out.k_used = static_cast<std::size_t>(k);

  bool any_greedy = false;
  for (const auto& pol : model.policies) any_greedy = any_greedy || pol->greedy_decode_only();

  std::vector<std::vector<A>> draws(static_cast<std::size_t>(k));
  if (!any_greedy) {
    parallel_for(static_cast<std::size_t>(k), options.workers, [&](std::size_t j) {
      Rng rng = seed.stream(j);
      draws[j] = draw_joint_action(model, s, 0, explained, rng);
    });
  }

  for (AgentId i = 0; i < p; ++i) {
    if (explained.pins_agent_at(i, 0)) continue;
    const auto& policy = *model.policies[static_cast<std::size_t>(i)];
    if (policy.greedy_decode_only()) {
      std::optional<A> m = policy.mode(s, i);
      if (!m) throw EstimationError(agent_label(i) + " policy offers no greedy decode");
      ModalAction<A> modal;
      modal.action = *m;
      modal.encoding = env.encode(*m);
      modal.frequency = 1.0;
      modal.histogram = {{modal.encoding, 1.0}};
      out.per_agent[static_cast<std::size_t>(i)] = std::move(modal);
      out.greedy_decode = true;
      continue;
    }
    if (any_greedy) {
      // Mixed setups: sample this agent alone from its own stream.
      std::map<std::string, std::pair<A, std::size_t>> counts;
      for (int j = 0; j < k; ++j) {
        Rng rng = seed.stream(static_cast<std::uint64_t>(j));
        A a = policy.sample(s, i, rng);
        auto [it, inserted] = counts.try_emplace(env.encode(a), a, 0);
        ++it->second.second;
      }
      out.per_agent[static_cast<std::size_t>(i)] = detail::modal_from_counts(counts, static_cast<std::size_t>(k));
      continue;
    }
    std::map<std::string, std::pair<A, std::size_t>> counts;
    for (const auto& joint : draws) {
      const A& a = joint[static_cast<std::size_t>(i)];
      auto [it, inserted] = counts.try_emplace(env.encode(a), a, 0);
      ++it->second.second;
    }
    out.per_agent[static_cast<std::size_t>(i)] = detail::modal_from_counts(counts, static_cast<std::size_t>(k));
  }
  if (out.greedy_decode) out.note = "greedy-decode, possibly unrepresentative";
  return out;
}

template <class S, class A>
struct ProbableTrajectory {
  std::vector<ProbableActions<A>> turns;
  // Joint action applied after each turn (pinned actions included).
  std::vector<std::vector<A>> joint_actions;
  std::vector<S> states;  // states[0] = start, states[h+1] after turn h
  bool truncated = false;  // reached a terminal state before the horizon
};

// Greedy multi-turn extension: turn 1 uses the explained pins; later turns
// pool every agent's draws (the explained agent included). The modal joint
// action advances the state through the most probable transition.
template <class S, class A>
ProbableTrajectory<S, A> probable_trajectory(const GameModel<S, A>& model, const S& s,
                                             const PinnedActionSet<A>& explained, int k, int horizon, SeededRng seed,
                                             const SimulationOptions& options = {}) {
  if (horizon < 1) throw ConfigError("trajectory horizon must be >= 1");
  ProbableTrajectory<S, A> out;
  out.states.push_back(s);
  S state = s;
  for (int h = 0; h < horizon; ++h) {
    if (model.env->is_terminal(state)) {
      out.truncated = true;
      break;
    }
    const PinnedActionSet<A> pins = h == 0 ? explained : PinnedActionSet<A>{};
    const SeededRng turn_seed = h == 0 ? seed : seed.fork(static_cast<std::uint64_t>(h));
    ProbableActions<A> turn = probable_actions(model, state, pins, k, turn_seed, options);
    std::vector<A> joint;
    for (AgentId i = 0; i < model.num_agents(); ++i) {
      if (const A* pinned = pins.find(i, 0)) {
        joint.push_back(*pinned);
      } else {
        joint.push_back(turn.per_agent[static_cast<std::size_t>(i)]->action);
      }
    }
    state = model.env->most_probable_transition(state, joint);
    out.turns.push_back(std::move(turn));
    out.joint_actions.push_back(std::move(joint));
    out.states.push_back(state);
  }
  return out;
}

}  // namespace mmx
