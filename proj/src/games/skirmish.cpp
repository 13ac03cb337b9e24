#include "mmx/games/skirmish.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace mmx::skirmish {

namespace {

const std::string& name(const SkirmishMap& m, int t) { return m.ids.at(static_cast<std::size_t>(t)); }

std::size_t at(int t) { return static_cast<std::size_t>(t); }

int cost(const UnitOrder& o) { return o.kind == OrderKind::reinforce ? o.amount : 0; }

// Distribution over one order per unit proportional to the product of
// per-order weights, restricted to total reinforcement <= budget.
class BudgetedProduct {
 public:
  BudgetedProduct(const std::vector<std::vector<UnitOrder>>& options, std::vector<std::vector<double>> weights, int budget)
      : options_(options), weights_(std::move(weights)), budget_(budget) {
    const std::size_t n = options_.size();
    mass_.assign(n + 1, std::vector<double>(at(budget_) + 1, 0.0));
    std::fill(mass_[n].begin(), mass_[n].end(), 1.0);
    for (std::size_t i = n; i-- > 0;)
      for (int b = 0; b <= budget_; ++b) {
        double total = 0.0;
        for (std::size_t k = 0; k < options_[i].size(); ++k) {
          const int c = cost(options_[i][k]);
          if (c <= b) total += weights_[i][k] * mass_[i + 1][at(b - c)];
        }
        mass_[i][at(b)] = total;
      }
  }

  double total() const { return mass_[0][at(budget_)]; }

  SkirmishAction sample(Rng& rng) const {
    SkirmishAction a;
    int b = budget_;
    std::vector<double> w;
    for (std::size_t i = 0; i < options_.size(); ++i) {
      w.assign(options_[i].size(), 0.0);
      for (std::size_t k = 0; k < options_[i].size(); ++k) {
        const int c = cost(options_[i][k]);
        if (c <= b) w[k] = weights_[i][k] * mass_[i + 1][at(b - c)];
      }
      const std::size_t k = rng.categorical(w);
      a.orders.push_back(options_[i][k]);
      b -= cost(options_[i][k]);
    }
    return a;
  }

  // Probability of `a`, or 0 when it is not in the support.
  double probability(const SkirmishAction& a) const {
    if (a.orders.size() != options_.size()) return 0.0;
    double w = 1.0;
    int spent = 0;
    for (std::size_t i = 0; i < options_.size(); ++i) {
      const auto it = std::find(options_[i].begin(), options_[i].end(), a.orders[i]);
      if (it == options_[i].end()) return 0.0;
      w *= weights_[i][static_cast<std::size_t>(it - options_[i].begin())];
      spent += cost(*it);
    }
    if (spent > budget_) return 0.0;
    return w / total();
  }

  // Highest-weight feasible action; ties go to the earlier option.
  SkirmishAction argmax() const {
    const std::size_t n = options_.size();
    std::vector<std::vector<double>> best(n + 1, std::vector<double>(at(budget_) + 1, 0.0));
    for (std::size_t i = n; i-- > 0;)
      for (int b = 0; b <= budget_; ++b) {
        double top = -1.0;
        for (std::size_t k = 0; k < options_[i].size(); ++k) {
          const int c = cost(options_[i][k]);
          if (c <= b) top = std::max(top, std::log(weights_[i][k]) + best[i + 1][at(b - c)]);
        }
        best[i][at(b)] = top;
      }
    SkirmishAction a;
    int b = budget_;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t pick = 0;
      double top = -INFINITY;
      for (std::size_t k = 0; k < options_[i].size(); ++k) {
        const int c = cost(options_[i][k]);
        if (c > b) continue;
        const double v = std::log(weights_[i][k]) + best[i + 1][at(b - c)];
        if (v > top) {
          top = v;
          pick = k;
        }
      }
      a.orders.push_back(options_[i][pick]);
      b -= cost(options_[i][pick]);
    }
    return a;
  }

 private:
  const std::vector<std::vector<UnitOrder>>& options_;
  std::vector<std::vector<double>> weights_;
  int budget_;
  std::vector<std::vector<double>> mass_;
};

std::vector<std::vector<double>> unit_weights(const std::vector<std::vector<UnitOrder>>& options) {
  std::vector<std::vector<double>> w;
  for (const auto& o : options) w.emplace_back(o.size(), 1.0);
  return w;
}

struct Attack {
  int from;
  int to;
  AgentId by;
  int strength;
};

}  // namespace

int SkirmishMap::index_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw ConfigError("unknown territory '" + id + "'");
  return static_cast<int>(it - ids.begin());
}

bool SkirmishMap::adjacent_to(int a, int b) const {
  if (a < 0 || a >= size()) return false;
  const auto& adj = adjacent[at(a)];
  return std::binary_search(adj.begin(), adj.end(), b);
}

int SkirmishBoard::owned_count(AgentId agent) const {
  return static_cast<int>(std::count(owner.begin(), owner.end(), agent));
}

std::vector<int> SkirmishBoard::owned(AgentId agent) const {
  std::vector<int> out;
  for (std::size_t t = 0; t < owner.size(); ++t)
    if (owner[t] == agent) out.push_back(static_cast<int>(t));
  return out;
}

void SkirmishConfig::validate() const {
  if (agents < 2) throw ConfigError("skirmish needs at least two agents");
  if (!(territory_weight >= 0.0 && army_weight >= 0.0 && territory_weight + army_weight > 0.0))
    throw ConfigError("skirmish weights must be non-negative and not both zero");
  if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
  if (!(enumeration_limit >= 1.0)) throw ConfigError("enumeration_limit must be >= 1");
}

int reinforcement_budget(const SkirmishBoard& b, AgentId agent) { return std::max(1, b.owned_count(agent) / 3); }

UtilityVector heuristic_value(const SkirmishBoard& b, int agents, double territory_weight, double army_weight) {
  UtilityVector terr(at(agents), 0.0), arm(at(agents), 0.0);
  double terr_total = 0.0, arm_total = 0.0;
  for (std::size_t t = 0; t < b.owner.size(); ++t) {
    const AgentId o = b.owner[t];
    if (o < 0 || o >= agents) continue;
    terr[at(o)] += 1.0;
    arm[at(o)] += b.armies[t];
    terr_total += 1.0;
    arm_total += b.armies[t];
  }
  const double scale = territory_weight + army_weight;
  UtilityVector out(at(agents));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ts = terr_total > 0 ? terr[i] / terr_total : 1.0 / agents;
    const double as = arm_total > 0 ? arm[i] / arm_total : 1.0 / agents;
    out[i] = (territory_weight * ts + army_weight * as) / scale;
  }
  return out;
}

SkirmishEnv::SkirmishEnv(SkirmishConfig config, std::shared_ptr<const SkirmishMap> map)
    : config_(config), map_(std::move(map)) {
  config_.validate();
  if (!map_ || map_->size() == 0) throw ConfigError("skirmish needs a non-empty map");
}

bool SkirmishEnv::is_terminal(const SkirmishBoard& b) const {
  if (b.turn >= config_.max_turns) return true;
  int alive = 0;
  for (AgentId i = 0; i < config_.agents; ++i)
    if (b.owned_count(i) > 0) ++alive;
  return alive <= 1;
}

bool SkirmishEnv::acts(const SkirmishBoard& b, AgentId agent) const {
  return !config_.sequential_turns || b.turn % config_.agents == agent;
}

std::vector<UnitOrder> SkirmishEnv::order_options(const SkirmishBoard& b, AgentId agent, int t) const {
  std::vector<UnitOrder> out{{t, OrderKind::hold, -1, 0}};
  if (!acts(b, agent)) return out;
  const int budget = reinforcement_budget(b, agent);
  for (int n = 1; n <= budget; ++n) out.push_back({t, OrderKind::reinforce, -1, n});
  const auto& adj = map_->adjacent[at(t)];
  if (b.armies[at(t)] >= 2)
    for (int n : adj)
      if (b.owner[at(n)] != agent) out.push_back({t, OrderKind::attack, n, 0});
  for (int n : adj) out.push_back({t, OrderKind::support, n, 0});
  return out;
}

ActionSpace SkirmishEnv::action_space(const SkirmishBoard& b, AgentId agent) const {
  ActionSpace space;
  const auto owned = b.owned(agent);
  if (owned.empty()) {
    space.eliminated = true;
    space.enumerated = true;
    space.actions.push_back({});
    return space;
  }
  for (int t : owned) {
    space.options.push_back(order_options(b, agent, t));
    space.product *= static_cast<double>(space.options.back().size());
  }
  if (space.product > config_.enumeration_limit) return space;
  space.enumerated = true;
  const int budget = reinforcement_budget(b, agent);
  SkirmishAction current;
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == space.options.size()) {
      space.actions.push_back(current);
      return;
    }
    for (const auto& o : space.options[i]) {
      if (cost(o) > left) continue;
      current.orders.push_back(o);
      self(self, i + 1, left - cost(o));
      current.orders.pop_back();
    }
  };
  rec(rec, 0, budget);
  return space;
}

std::optional<std::vector<SkirmishAction>> SkirmishEnv::legal_actions(const SkirmishBoard& b, AgentId agent) const {
  if (is_terminal(b)) return std::vector<SkirmishAction>{};
  auto space = action_space(b, agent);
  if (!space.enumerated) return std::nullopt;
  return std::move(space.actions);
}

void SkirmishEnv::check_legal(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const {
  if (agent < 0 || agent >= config_.agents) throw IllegalActionError("agent out of range");
  if (b.map != map_ && !(b.map && b.map->ids == map_->ids)) throw IllegalActionError("board does not use this game's map");
  const auto owned = b.owned(agent);
  std::set<int> seen;
  int spent = 0;
  for (const auto& o : a.orders) {
    if (o.territory < 0 || o.territory >= map_->size()) throw IllegalActionError("order for unknown territory");
    const std::string& tn = name(*map_, o.territory);
    if (b.owner[at(o.territory)] != agent) throw IllegalActionError("territory " + tn + " is not held by " + agent_label(agent));
    if (!seen.insert(o.territory).second) throw IllegalActionError("territory " + tn + " has more than one order");
    const auto options = order_options(b, agent, o.territory);
    if (std::find(options.begin(), options.end(), o) == options.end())
      throw IllegalActionError("territory " + tn + ": order " + encode_order(o) + " is not allowed");
    spent += cost(o);
  }
  for (int t : owned)
    if (!seen.contains(t)) throw IllegalActionError("territory " + name(*map_, t) + " has no order");
  if (spent > reinforcement_budget(b, agent))
    throw IllegalActionError(agent_label(agent) + " reinforces " + std::to_string(spent) + " armies, budget is " +
                             std::to_string(reinforcement_budget(b, agent)));
  if (!std::is_sorted(a.orders.begin(), a.orders.end(), [](const auto& x, const auto& y) { return x.territory < y.territory; }))
    throw IllegalActionError("orders must be sorted by territory");
}

bool SkirmishEnv::is_legal(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const {
  if (is_terminal(b)) return false;
  try {
    check_legal(b, agent, a);
    return true;
  } catch (const IllegalActionError&) {
    return false;
  }
}

SkirmishBoard SkirmishEnv::adjudicate(const SkirmishBoard& b, std::span<const SkirmishAction> joint, Rng* rng) const {
  if (joint.size() != static_cast<std::size_t>(config_.agents)) throw DimensionError("joint action length must equal the number of agents");
  for (AgentId i = 0; i < config_.agents; ++i) check_legal(b, i, joint[at(i)]);

  SkirmishBoard next = b;
  const std::size_t n = b.owner.size();
  std::vector<const UnitOrder*> order_of(n, nullptr);
  for (const auto& a : joint)
    for (const auto& o : a.orders) order_of[at(o.territory)] = &o;

  for (std::size_t t = 0; t < n; ++t)
    if (order_of[t] && order_of[t]->kind == OrderKind::reinforce) next.armies[t] += order_of[t]->amount;

  // Supports from territories of `by` adjacent to `into`.
  auto supports = [&](int into, AgentId by) {
    int s = 0;
    for (int u : map_->adjacent[at(into)]) {
      const UnitOrder* o = order_of[at(u)];
      if (o && b.owner[at(u)] == by && o->kind == OrderKind::support && o->target == into) ++s;
    }
    return s;
  };

  std::vector<Attack> attacks;
  for (std::size_t t = 0; t < n; ++t) {
    const UnitOrder* o = order_of[t];
    if (!o || o->kind != OrderKind::attack) continue;
    const AgentId by = b.owner[t];
    attacks.push_back({static_cast<int>(t), o->target, by, next.armies[t] + supports(o->target, by)});
  }
  auto defense = [&](int t) {
    const AgentId o = b.owner[at(t)];
    return next.armies[at(t)] + (o == kNeutral ? 0 : supports(t, o));
  };
  auto succeeds = [&](int attack, int resist) {
    if (!rng || !config_.stochastic) return attack > resist;
    if (resist <= 0) return true;
    return rng->uniform01() < static_cast<double>(attack) / (attack + resist);
  };

  std::vector<bool> won(attacks.size(), false);
  std::vector<bool> decided(attacks.size(), false);
  auto strongest = [&](std::size_t k) {
    for (std::size_t m = 0; m < attacks.size(); ++m)
      if (m != k && attacks[m].to == attacks[k].to && attacks[m].strength >= attacks[k].strength) return false;
    return true;
  };
  for (std::size_t k = 0; k < attacks.size(); ++k) {
    if (decided[k]) continue;
    decided[k] = true;
    if (!strongest(k)) continue;
    // Head-to-head: the target is attacking this attacker's territory.
    std::size_t rev = attacks.size();
    for (std::size_t m = 0; m < attacks.size(); ++m)
      if (attacks[m].from == attacks[k].to && attacks[m].to == attacks[k].from) rev = m;
    if (rev == attacks.size()) {
      won[k] = succeeds(attacks[k].strength, defense(attacks[k].to));
      continue;
    }
    decided[rev] = true;
    const int a = attacks[k].strength, d = attacks[rev].strength;
    if (!strongest(rev)) {
      won[k] = succeeds(a, d);
    } else if (rng && config_.stochastic) {
      (rng->uniform01() < static_cast<double>(a) / (a + d) ? won[k] : won[rev]) = true;
    } else if (a != d) {
      (a > d ? won[k] : won[rev]) = true;
    }
  }

  // Attackers leave one army behind whether or not they win.
  std::vector<int> moved(n, 0);
  for (std::size_t k = 0; k < attacks.size(); ++k)
    if (won[k]) moved[at(attacks[k].from)] = next.armies[at(attacks[k].from)] - 1;
  SkirmishBoard after = next;
  for (std::size_t t = 0; t < n; ++t) after.armies[t] -= moved[t];
  for (std::size_t k = 0; k < attacks.size(); ++k) {
    if (!won[k]) continue;
    const std::size_t to = at(attacks[k].to);
    const int defenders = moved[to] > 0 ? 1 : next.armies[to];
    after.owner[to] = attacks[k].by;
    after.armies[to] = std::max(1, moved[at(attacks[k].from)] - defenders);
  }
  after.turn = b.turn + 1;
  return after;
}

SkirmishBoard SkirmishEnv::transition(const SkirmishBoard& b, std::span<const SkirmishAction> joint, Rng& rng) const {
  if (is_terminal(b)) throw IllegalActionError("skirmish board is terminal");
  return adjudicate(b, joint, &rng);
}

SkirmishBoard SkirmishEnv::most_probable_transition(const SkirmishBoard& b, std::span<const SkirmishAction> joint) const {
  if (is_terminal(b)) throw IllegalActionError("skirmish board is terminal");
  return adjudicate(b, joint, nullptr);
}

UtilityVector SkirmishEnv::reward(const SkirmishBoard&, const SkirmishBoard&) const {
  return UtilityVector(at(config_.agents), 0.0);
}

std::string SkirmishEnv::encode_order(const UnitOrder& o) const {
  switch (o.kind) {
    case OrderKind::hold: return "hold";
    case OrderKind::reinforce: return "reinforce(" + std::to_string(o.amount) + ")";
    case OrderKind::attack: return "attack(" + name(*map_, o.target) + ")";
    case OrderKind::support: return "support(" + name(*map_, o.target) + ")";
  }
  return "hold";
}

std::string SkirmishEnv::encode(const SkirmishAction& a) const {
  if (a.orders.empty()) return "none";
  std::string out;
  for (const auto& o : a.orders) {
    if (!out.empty()) out += ";";
    out += name(*map_, o.territory) + ":" + encode_order(o);
  }
  return out;
}

std::vector<SubOrder> SkirmishEnv::sub_orders(const SkirmishAction& a) const {
  std::vector<SubOrder> out;
  for (const auto& o : a.orders) out.push_back({name(*map_, o.territory), encode_order(o)});
  return out;
}

std::optional<std::vector<std::string>> SkirmishEnv::units(const SkirmishBoard& b, AgentId agent) const {
  std::vector<std::string> out;
  for (int t : b.owned(agent)) out.push_back(name(*map_, t));
  return out;
}

SkirmishAction SkirmishEnv::parse_action(const std::string& text) const {
  SkirmishAction a;
  if (text == "none" || text.empty()) return a;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    const std::string part = text.substr(start, end - start);
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw ConfigError("expected TERRITORY:order in '" + part + "'");
    UnitOrder o;
    o.territory = map_->index_of(part.substr(0, colon));
    const std::string order = part.substr(colon + 1);
    const auto open = order.find('(');
    const std::string verb = order.substr(0, open);
    std::string arg;
    if (open != std::string::npos) {
      if (order.back() != ')') throw ConfigError("unbalanced parenthesis in '" + part + "'");
      arg = order.substr(open + 1, order.size() - open - 2);
    }
    if (verb == "hold" && arg.empty() && open == std::string::npos) {
      o.kind = OrderKind::hold;
    } else if (verb == "reinforce") {
      o.kind = OrderKind::reinforce;
      try {
        std::size_t used = 0;
        o.amount = std::stoi(arg, &used);
        if (used != arg.size()) throw ConfigError("");
      } catch (const std::exception&) {
        throw ConfigError("reinforce needs an integer in '" + part + "'");
      }
    } else if (verb == "attack" || verb == "support") {
      o.kind = verb == "attack" ? OrderKind::attack : OrderKind::support;
      o.target = map_->index_of(arg);
    } else {
      throw ConfigError("unknown order '" + order + "'");
    }
    a.orders.push_back(o);
    start = end + 1;
  }
  std::sort(a.orders.begin(), a.orders.end(), [](const auto& x, const auto& y) { return x.territory < y.territory; });
  return a;
}

UtilityVector HeuristicValue::evaluate(const SkirmishBoard& b, Rng&) const {
  return heuristic_value(b, config_.agents, config_.territory_weight, config_.army_weight);
}

SkirmishAction hold_all(const SkirmishBoard& b, AgentId agent) {
  SkirmishAction a;
  for (int t : b.owned(agent)) a.orders.push_back({t, OrderKind::hold, -1, 0});
  return a;
}

SkirmishAction UniformPolicy::sample(const SkirmishBoard& b, AgentId agent, Rng& rng) const {
  const auto owned = b.owned(agent);
  if (owned.empty()) return {};
  std::vector<std::vector<UnitOrder>> options;
  for (int t : owned) options.push_back(env_->order_options(b, agent, t));
  return BudgetedProduct(options, unit_weights(options), reinforcement_budget(b, agent)).sample(rng);
}

std::optional<double> UniformPolicy::prob(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const {
  const auto owned = b.owned(agent);
  if (owned.empty()) return a.orders.empty() ? 1.0 : 0.0;
  std::vector<std::vector<UnitOrder>> options;
  for (int t : owned) options.push_back(env_->order_options(b, agent, t));
  return BudgetedProduct(options, unit_weights(options), reinforcement_budget(b, agent)).probability(a);
}

HeuristicPolicy::HeuristicPolicy(std::shared_ptr<const SkirmishEnv> env, double temperature)
    : env_(std::move(env)), temperature_(temperature) {
  if (!(temperature_ > 0.0)) throw ConfigError("heuristic policy temperature must be > 0");
}

double HeuristicPolicy::order_score(const SkirmishBoard& b, AgentId agent, const UnitOrder& o) const {
  const auto& map = *env_->map();
  const int t = o.territory;
  auto border = [&](int x) {
    for (int n : map.adjacent[at(x)])
      if (b.owner[at(n)] != agent) return true;
    return false;
  };
  auto threat = [&](int x) {
    int worst = 0;
    for (int n : map.adjacent[at(x)])
      if (b.owner[at(n)] != agent && b.owner[at(n)] != kNeutral) worst = std::max(worst, b.armies[at(n)]);
    return worst;
  };
  switch (o.kind) {
    case OrderKind::hold: return 0.0;
    case OrderKind::reinforce: return border(t) ? 0.4 + 0.2 * (o.amount - 1) + 0.2 * (threat(t) >= b.armies[at(t)]) : -1.0;
    case OrderKind::attack: {
      const double margin = b.armies[at(t)] - b.armies[at(o.target)] - 1;
      return 0.6 * margin + (b.owner[at(o.target)] == kNeutral ? 0.3 : 0.0);
    }
    case OrderKind::support: {
      if (b.owner[at(o.target)] == agent) return threat(o.target) >= b.armies[at(o.target)] ? 0.5 : -1.0;
      for (int n : map.adjacent[at(o.target)])
        if (n != t && b.owner[at(n)] == agent && b.armies[at(n)] >= 2) return 0.3;
      return -1.0;
    }
  }
  return 0.0;
}

SkirmishAction HeuristicPolicy::sample(const SkirmishBoard& b, AgentId agent, Rng& rng) const {
  const auto owned = b.owned(agent);
  if (owned.empty()) return {};
  std::vector<std::vector<UnitOrder>> options;
  std::vector<std::vector<double>> weights;
  for (int t : owned) {
    options.push_back(env_->order_options(b, agent, t));
    auto& w = weights.emplace_back();
    for (const auto& o : options.back()) w.push_back(std::exp(order_score(b, agent, o) / temperature_));
  }
  return BudgetedProduct(options, std::move(weights), reinforcement_budget(b, agent)).sample(rng);
}

std::optional<SkirmishAction> HeuristicPolicy::mode(const SkirmishBoard& b, AgentId agent) const {
  const auto owned = b.owned(agent);
  if (owned.empty()) return SkirmishAction{};
  std::vector<std::vector<UnitOrder>> options;
  std::vector<std::vector<double>> weights;
  for (int t : owned) {
    options.push_back(env_->order_options(b, agent, t));
    auto& w = weights.emplace_back();
    for (const auto& o : options.back()) w.push_back(std::exp(order_score(b, agent, o)));
  }
  return BudgetedProduct(options, std::move(weights), reinforcement_budget(b, agent)).argmax();
}

SkirmishAction HoldPolicy::sample(const SkirmishBoard& b, AgentId agent, Rng&) const { return hold_all(b, agent); }

std::optional<double> HoldPolicy::prob(const SkirmishBoard& b, AgentId agent, const SkirmishAction& a) const {
  return a == hold_all(b, agent) ? 1.0 : 0.0;
}

std::optional<SkirmishAction> HoldPolicy::mode(const SkirmishBoard& b, AgentId agent) const { return hold_all(b, agent); }

SkirmishBoard make_board(const std::vector<std::string>& ids, const std::vector<std::vector<std::string>>& adjacent,
                         const std::vector<AgentId>& owner, const std::vector<int>& armies, int agents) {
  const std::size_t n = ids.size();
  if (n == 0) throw ConfigError("board has no territories");
  if (adjacent.size() != n || owner.size() != n || armies.size() != n)
    throw ConfigError("territory fields must all have one entry per territory");
  auto map = std::make_shared<SkirmishMap>();
  map->ids = ids;
  if (std::set<std::string>(ids.begin(), ids.end()).size() != n) throw ConfigError("territory ids must be unique");
  map->adjacent.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (const auto& a : adjacent[t]) {
      const int u = map->index_of(a);
      if (static_cast<std::size_t>(u) == t) throw ConfigError("territory " + ids[t] + " lists itself as adjacent");
      map->adjacent[t].push_back(u);
    }
    std::sort(map->adjacent[t].begin(), map->adjacent[t].end());
    map->adjacent[t].erase(std::unique(map->adjacent[t].begin(), map->adjacent[t].end()), map->adjacent[t].end());
  }
  for (std::size_t t = 0; t < n; ++t)
    for (int u : map->adjacent[t])
      if (!map->adjacent_to(u, static_cast<int>(t)))
        throw ConfigError("adjacency between " + ids[t] + " and " + ids[at(u)] + " is not symmetric");
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const int t = q.front();
    q.pop();
    for (int u : map->adjacent[at(t)])
      if (!seen[at(u)]) {
        seen[at(u)] = true;
        q.push(u);
      }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw ConfigError("territory graph is not connected");
  for (std::size_t t = 0; t < n; ++t) {
    if (owner[t] != kNeutral && (owner[t] < 0 || owner[t] >= agents))
      throw ConfigError("territory " + ids[t] + " has an out-of-range owner");
    if (armies[t] < 0) throw ConfigError("territory " + ids[t] + " has negative armies");
    if (owner[t] != kNeutral && armies[t] == 0) throw ConfigError("territory " + ids[t] + " is owned but has no armies");
  }
  SkirmishBoard b;
  b.map = std::move(map);
  b.owner = owner;
  b.armies = armies;
  return b;
}

SkirmishGame make_game(SkirmishConfig config, SkirmishBoard board, std::vector<PolicyKind> policies, double temperature) {
  config.validate();
  if (policies.empty()) policies.assign(at(config.agents), PolicyKind::heuristic);
  if (policies.size() != at(config.agents)) throw ConfigError("expected one policy per agent");
  SkirmishGame g;
  auto env = std::make_shared<const SkirmishEnv>(config, board.map);
  g.env = env;
  g.board = std::move(board);
  g.model.env = env;
  g.model.values = std::make_shared<HeuristicValue>(config);
  for (AgentId i = 0; i < config.agents; ++i) {
    switch (policies[at(i)]) {
      case PolicyKind::uniform: g.model.policies.push_back(std::make_shared<UniformPolicy>(env)); break;
      case PolicyKind::heuristic: g.model.policies.push_back(std::make_shared<HeuristicPolicy>(env, temperature)); break;
      case PolicyKind::hold: g.model.policies.push_back(std::make_shared<HoldPolicy>()); break;
    }
    g.agent_names.push_back(agent_label(i));
  }
  return g;
}

SkirmishGame game_from_json(const json& j) {
  try {
    SkirmishConfig c;
    c.agents = j.value("agents", 2);
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      if (w.is_array()) {
        if (w.size() != 2) throw ConfigError("weights array must hold [territory, army]");
        c.territory_weight = w[0].get<double>();
        c.army_weight = w[1].get<double>();
      } else {
        c.territory_weight = w.value("territory", c.territory_weight);
        c.army_weight = w.value("army", c.army_weight);
      }
    }
    c.discount = j.value("discount", c.discount);
    c.max_turns = j.value("max_turns", c.max_turns);
    c.stochastic = j.value("stochastic", c.stochastic);
    c.sequential_turns = j.value("sequential_turns", c.sequential_turns);
    c.enumeration_limit = j.value("enumeration_limit", c.enumeration_limit);
    c.validate();

    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> adjacent;
    std::vector<AgentId> owner;
    std::vector<int> armies;
    for (const json& t : j.at("territories")) {
      ids.push_back(t.at("id").get<std::string>());
      adjacent.push_back(t.value("adjacent", std::vector<std::string>{}));
      const json o = t.value("owner", json());
      owner.push_back(o.is_null() ? kNeutral : o.get<int>());
      armies.push_back(t.value("armies", 0));
    }
    SkirmishBoard board = make_board(ids, adjacent, owner, armies, c.agents);
    board.turn = j.value("turn", 0);

    std::vector<PolicyKind> kinds;
    if (j.contains("policies"))
      for (const json& p : j.at("policies")) {
        const std::string s = p.get<std::string>();
        if (s == "uniform") kinds.push_back(PolicyKind::uniform);
        else if (s == "heuristic") kinds.push_back(PolicyKind::heuristic);
        else if (s == "hold") kinds.push_back(PolicyKind::hold);
        else throw ConfigError("unknown skirmish policy '" + s + "'");
      }
    return make_game(c, std::move(board), std::move(kinds), j.value("temperature", 1.0));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed skirmish board: ") + e.what());
  }
}

json board_to_json(const SkirmishBoard& b) {
  json terr = json::array();
  for (std::size_t t = 0; t < b.owner.size(); ++t) {
    json adj = json::array();
    for (int u : b.map->adjacent[t]) adj.push_back(b.map->ids[at(u)]);
    terr.push_back({{"id", b.map->ids[t]},
                    {"owner", b.owner[t] == kNeutral ? json() : json(b.owner[t])},
                    {"armies", b.armies[t]},
                    {"adjacent", adj}});
  }
  return {{"territories", terr}, {"turn", b.turn}};
}

json action_to_json(const SkirmishEnv& env, const SkirmishAction& a) {
  json orders = json::object();
  for (const auto& s : env.sub_orders(a)) orders[s.unit] = s.order;
  return {{"orders", orders}, {"encoding", env.encode(a)}};
}

SkirmishAction action_from_json(const SkirmishEnv& env, const json& j) {
  if (j.is_string()) return env.parse_action(j.get<std::string>());
  if (j.is_object() && j.contains("orders")) {
    std::string text;
    for (const auto& [unit, order] : j.at("orders").items()) {
      if (!order.is_string()) throw ConfigError("order for " + unit + " must be a string");
      if (!text.empty()) text += ";";
      text += unit + ":" + order.get<std::string>();
    }
    return env.parse_action(text);
  }
  if (j.is_object() && j.contains("encoding")) return env.parse_action(j.at("encoding").get<std::string>());
  throw ConfigError("skirmish action must be an encoding string or {\"orders\": {...}}");
}

}  // namespace mmx::skirmish
