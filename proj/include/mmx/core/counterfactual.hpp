#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmx/core/explain.hpp"

namespace mmx {

enum class Polarity { require, forbid };

// "Do psi" or "do not do psi" for one unit sub-order.
struct Constraint {
  Polarity polarity = Polarity::require;
  SubOrder sub_order;
};

template <class A>
struct CounterfactualQuery {
  A reference{};
  std::vector<Constraint> constraints;
};

struct CounterfactualParams {
  double kappa = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  int samples = 500;  // K draws from the acting agent's policy
  int utility_samples = 200;
  int top_n = 3;
  // Use the policy's exact probability instead of the empirical frequency
  // when the policy exposes one.
  bool use_exact_prob = false;

  void validate() const {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in [0, 1]");
    if (!(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0)) throw ConfigError("need alpha, beta >= 0 and alpha + beta > 0");
    if (samples < 1) throw ConfigError("counterfactual sample count K must be >= 1");
    if (utility_samples < 1) throw ConfigError("utility sample count must be >= 1");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
  }
};

enum class FeasibleStatus { ok, unsatisfiable, insufficient_support };

inline std::string to_string(FeasibleStatus s) {
  switch (s) {
    case FeasibleStatus::ok: return "ok";
    case FeasibleStatus::unsatisfiable: return "unsatisfiable";
    case FeasibleStatus::insufficient_support: return "raise K or lower kappa";
  }
  return "ok";
}

template <class A>
struct FeasibleSet {
  std::vector<A> actions;  // sorted by canonical encoding
  std::vector<std::string> encodings;
  std::vector<double> probability;  // P-hat (or exact) per action; 0 for enumeration-only entries
  FeasibleStatus status = FeasibleStatus::ok;
  bool used_enumeration = false;

  bool empty() const { return actions.empty(); }
};

// phi: every required sub-order present verbatim, every forbidden one absent.
bool satisfies(const std::vector<SubOrder>& orders, const std::vector<Constraint>& constraints);

// Fraction of units whose sub-orders match exactly, over the union of units
// ordered by either action. Two actions with no units are identical (1.0).
double order_similarity(const std::vector<SubOrder>& a, const std::vector<SubOrder>& b);

template <class S, class A>
bool satisfies(const Environment<S, A>& env, const A& action, const std::vector<Constraint>& constraints) {
  return satisfies(env.sub_orders(action), constraints);
}

template <class S, class A>
double order_similarity(const Environment<S, A>& env, const A& a, const A& b) {
  return order_similarity(env.sub_orders(a), env.sub_orders(b));
}

// Rejects contradictory constraints and sub-orders on units the agent does
// not control.
template <class S, class A>
void validate_query(const Environment<S, A>& env, const S& s, AgentId agent, const CounterfactualQuery<A>& q) {
  if (!env.is_legal(s, agent, q.reference))
    throw ConfigError("reference action '" + env.encode(q.reference) + "' is not legal for " + agent_label(agent));
  std::set<SubOrder> required, forbidden;
  for (const auto& c : q.constraints) (c.polarity == Polarity::require ? required : forbidden).insert(c.sub_order);
  for (const auto& r : required)
    if (forbidden.contains(r)) throw ConfigError("sub-order " + r.unit + ":" + r.order + " is both required and forbidden");
  if (const auto units = env.units(s, agent)) {
    const std::set<std::string> owned(units->begin(), units->end());
    for (const auto& c : q.constraints)
      if (!owned.contains(c.sub_order.unit))
        throw ConfigError("unit '" + c.sub_order.unit + "' is not controlled by " + agent_label(agent));
  }
}

// A' = {a : P(a) > kappa, phi(a, C_q), a != a_c}. Draws K actions from the
// agent's policy. At kappa = 0, games that enumerate legal actions add every
// satisfying legal action, so any satisfiable query yields a non-empty set.
template <class S, class A>
FeasibleSet<A> feasible_set(const GameModel<S, A>& model, const S& s, AgentId agent, const CounterfactualQuery<A>& q,
                            double kappa, int samples, SeededRng seed, bool use_exact_prob = false) {
  model.validate();
  const auto& env = *model.env;
  validate_query(env, s, agent, q);
  if (samples < 1) throw ConfigError("K must be >= 1");
  const auto& policy = *model.policies.at(static_cast<std::size_t>(agent));
  const std::string reference = env.encode(q.reference);

  std::map<std::string, std::pair<A, std::size_t>> counts;
  for (int j = 0; j < samples; ++j) {
    Rng rng = seed.stream(static_cast<std::uint64_t>(j));
    A a = policy.sample(s, agent, rng);
    auto [it, inserted] = counts.try_emplace(env.encode(a), a, 0);
    ++it->second.second;
  }

  std::map<std::string, std::pair<A, double>> kept;
  for (const auto& [enc, entry] : counts) {
    double prob = static_cast<double>(entry.second) / static_cast<double>(samples);
    if (use_exact_prob)
      if (auto exact = policy.prob(s, agent, entry.first)) prob = *exact;
    if (!(prob > kappa)) continue;
    if (enc == reference) continue;
    if (!satisfies(env, entry.first, q.constraints)) continue;
    kept.emplace(enc, std::make_pair(entry.first, prob));
  }

  FeasibleSet<A> out;
  std::optional<std::vector<A>> legal;
  if (kappa == 0.0) legal = env.legal_actions(s, agent);
  if (legal) {
    out.used_enumeration = true;
    for (const auto& a : *legal) {
      std::string enc = env.encode(a);
      if (enc == reference || kept.contains(enc) || !satisfies(env, a, q.constraints)) continue;
      double prob = 0.0;
      if (use_exact_prob)
        if (auto exact = policy.prob(s, agent, a)) prob = *exact;
      kept.emplace(std::move(enc), std::make_pair(a, prob));
    }
  }
  for (auto& [enc, entry] : kept) {
    out.encodings.push_back(enc);
    out.actions.push_back(entry.first);
    out.probability.push_back(entry.second);
  }
  if (out.empty()) out.status = legal ? FeasibleStatus::unsatisfiable : FeasibleStatus::insufficient_support;
  return out;
}

// u_{i,a}: agent i's component of SBUE for a single pinned action.
template <class S, class A>
double expected_own_utility(const GameModel<S, A>& model, const S& s, AgentId agent, const A& action, int k,
                            SeededRng seed, const SimulationOptions& options = {}) {
  PinnedActionSet<A> pin;
  pin.add(agent, action, 0);
  return sbue(model, s, pin, k, false, std::nullopt, seed, options).expected_utility.at(static_cast<std::size_t>(agent));
}

template <class A>
struct ScoredCounterfactual {
  A action{};
  std::string encoding;
  double similarity = 0.0;
  double expected_own_utility = 0.0;
  double normalized_utility = 0.0;
  double score = 0.0;
};

// Z-normalizes raw utilities across the candidates (0 when they are all
// equal), scores alpha * similarity + beta * normalized utility and returns
// the top_n by score; ties by similarity descending, then encoding.
template <class A>
std::vector<ScoredCounterfactual<A>> rank_counterfactuals(std::vector<ScoredCounterfactual<A>> candidates, double alpha,
                                                          double beta, int top_n) {
  const std::size_t n = candidates.size();
  if (n == 0) return candidates;
  double mean = 0.0;
  for (const auto& c : candidates) mean += c.expected_own_utility;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& c : candidates) ss += (c.expected_own_utility - mean) * (c.expected_own_utility - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  for (auto& c : candidates) {
    c.normalized_utility = sd >= kEpsilonSigma ? (c.expected_own_utility - mean) / sd : 0.0;
    c.score = alpha * c.similarity + beta * c.normalized_utility;
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.encoding < b.encoding;
  });
  if (candidates.size() > static_cast<std::size_t>(top_n)) candidates.resize(static_cast<std::size_t>(top_n));
  return candidates;
}

template <class A>
struct CounterfactualResult {
  std::vector<ScoredCounterfactual<A>> ranked;
  FeasibleStatus status = FeasibleStatus::ok;
  std::size_t feasible_count = 0;
  bool used_enumeration = false;
};

// Seeds: the feasible-set draws use seed.fork(0) and every candidate's
// utility estimate uses seed.fork(1), so candidates share random numbers.
template <class S, class A>
CounterfactualResult<A> counterfactuals(const GameModel<S, A>& model, const S& s, AgentId agent,
                                        const CounterfactualQuery<A>& q, const CounterfactualParams& params,
                                        SeededRng seed, const SimulationOptions& options = {}) {
  params.validate();
  FeasibleSet<A> feasible = feasible_set(model, s, agent, q, params.kappa, params.samples, seed.fork(0), params.use_exact_prob);
  CounterfactualResult<A> out;
  out.status = feasible.status;
  out.feasible_count = feasible.actions.size();
  out.used_enumeration = feasible.used_enumeration;
  if (feasible.empty()) return out;
  std::vector<ScoredCounterfactual<A>> candidates;
  candidates.reserve(feasible.actions.size());
  for (std::size_t n = 0; n < feasible.actions.size(); ++n) {
    ScoredCounterfactual<A> c;
    c.action = feasible.actions[n];
    c.encoding = feasible.encodings[n];
    c.similarity = order_similarity(*model.env, q.reference, c.action);
    c.expected_own_utility = expected_own_utility(model, s, agent, c.action, params.utility_samples, seed.fork(1), options);
    candidates.push_back(std::move(c));
  }
  out.ranked = rank_counterfactuals(std::move(candidates), params.alpha, params.beta, params.top_n);
  return out;
}

}  // namespace mmx
