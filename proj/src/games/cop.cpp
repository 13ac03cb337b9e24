#include "mmx/games/cop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mmx::cop {

namespace {

constexpr double kExcluded = -std::numeric_limits<double>::infinity();

AgentId letter_to_agent(const std::string& s) {
  if (s.size() != 1) throw ConfigError("agent must be one of A, B, C; got '" + s + "'");
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  if (c < 'A' || c > 'C') throw ConfigError("agent must be one of A, B, C; got '" + s + "'");
  return c - 'A';
}

std::string lower_letter(AgentId id) { return std::string(1, static_cast<char>('a' + id)); }

std::array<AgentId, 2> others(AgentId agent) {
  std::array<AgentId, 2> out{};
  int n = 0;
  for (AgentId j = 0; j < kAgents; ++j)
    if (j != agent) out[static_cast<std::size_t>(n++)] = j;
  return out;
}

AgentId third(AgentId a, AgentId b) { return 3 - a - b; }

bool valid_agent(AgentId a) { return a >= 0 && a < kAgents; }

}  // namespace

std::string to_string(Template t) {
  switch (t) {
    case Template::accuse: return "accuse";
    case Template::defend_self: return "defend_self";
    case Template::propose_alliance: return "propose_alliance";
    case Template::affirm_trust: return "affirm_trust";
    case Template::sow_doubt: return "sow_doubt";
    case Template::smalltalk: return "smalltalk";
    case Template::free_text: return "free_text";
  }
  return "smalltalk";
}

Template template_from_string(const std::string& s) {
  for (Template t : {Template::accuse, Template::defend_self, Template::propose_alliance, Template::affirm_trust,
                     Template::sow_doubt, Template::smalltalk, Template::free_text})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown message template '" + s + "'");
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::communicate: return "communicate";
    case Phase::announce: return "announce";
    case Phase::terminal: return "terminal";
  }
  return "terminal";
}

char agent_letter(AgentId id) { return static_cast<char>('A' + id); }

UtilityVector cop_payoffs(const Announcement& a, const Announcement& b, const Announcement& c) {
  const std::array<const Announcement*, kAgents> ann{&a, &b, &c};
  bool blames[kAgents][kAgents] = {};
  bool anyone = false;
  for (AgentId x = 0; x < kAgents; ++x)
    for (AgentId y = 0; y < kAgents; ++y) {
      blames[x][y] = x != y && ann[static_cast<std::size_t>(x)]->guilty[static_cast<std::size_t>(y)];
      anyone = anyone || blames[x][y];
    }
  if (!anyone) return {-5.0, -5.0, -5.0};
  UtilityVector out(kAgents, 0.0);
  for (AgentId x = 0; x < kAgents; ++x)
    for (AgentId y = 0; y < kAgents; ++y) {
      if (y == x || !blames[y][x]) continue;
      const AgentId z = third(x, y);
      const bool void_vote = blames[x][y] && blames[z][y] && !blames[z][x];
      if (!void_vote) out[static_cast<std::size_t>(x)] -= 10.0;
    }
  return out;
}

Announcement make_announcement(AgentId by, bool first_other_guilty, bool second_other_guilty) {
  if (!valid_agent(by)) throw ConfigError("announcer out of range");
  Announcement a;
  a.by = by;
  const auto o = others(by);
  a.guilty[static_cast<std::size_t>(o[0])] = first_other_guilty;
  a.guilty[static_cast<std::size_t>(o[1])] = second_other_guilty;
  return a;
}

std::array<AgentId, kAgents> precedence_for_round(std::uint64_t seed, int round) {
  std::array<AgentId, kAgents> order{0, 1, 2};
  Rng rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(round) + 1)));
  for (std::size_t i = kAgents - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  return order;
}

void CopConfig::validate() const {
  if (rounds < 1) throw ConfigError("COP needs at least one communication round");
}

CopEnv::CopEnv(CopConfig config) : config_(config) { config_.validate(); }

CopState CopEnv::initial_state() const {
  CopState s;
  s.rounds = config_.rounds;
  s.precedence_seed = config_.seed;
  s.precedence = precedence_for_round(config_.seed, 0);
  return s;
}

std::string render(AgentId sender, const Message& m) {
  const std::string r(1, agent_letter(m.recipient));
  const std::string t = valid_agent(m.target) ? std::string(1, agent_letter(m.target)) : "";
  (void)sender;
  switch (m.kind) {
    case Template::accuse:
      return m.target == m.recipient ? "I know it was you, " + r + ". Don't even try." : r + ", I'm pretty sure " + t + " did it.";
    case Template::sow_doubt:
      return m.target == m.recipient ? "You seem nervous, " + r + ". Anything you want to tell me?"
                                     : "Be careful with " + t + ", " + r + ". Something doesn't add up.";
    case Template::propose_alliance: return r + ", let's back each other up and walk out of here together.";
    case Template::affirm_trust: return "I trust you, " + r + ".";
    case Template::defend_self: return "I had nothing to do with the robbery, " + r + ".";
    case Template::smalltalk: return "Rough day, huh " + r + "?";
    case Template::free_text: return m.text;
  }
  return m.text;
}

std::string announcement_text(const Announcement& a) {
  const auto o = others(a.by);
  auto word = [&](AgentId j) { return a.guilty[static_cast<std::size_t>(j)] ? "guilty" : "innocent"; };
  return "(" + lower_letter(o[0]) + "=" + word(o[0]) + ", " + lower_letter(o[1]) + "=" + word(o[1]) + ")";
}

namespace {

bool message_legal(AgentId agent, const Message& m) {
  if (!valid_agent(m.recipient) || m.recipient == agent) return false;
  switch (m.kind) {
    case Template::accuse:
    case Template::sow_doubt: return valid_agent(m.target) && m.target != agent;
    case Template::propose_alliance:
    case Template::affirm_trust: return m.target == m.recipient;
    case Template::defend_self:
    case Template::smalltalk: return m.target == -1;
    case Template::free_text: return m.target == -1 && !m.text.empty();
  }
  return false;
}

bool legal_in(const CopState& s, AgentId agent, const CopAction& a) {
  if (!valid_agent(agent)) return false;
  switch (s.phase) {
    case Phase::communicate: return std::holds_alternative<Message>(a) && message_legal(agent, std::get<Message>(a));
    case Phase::announce: {
      if (!std::holds_alternative<Announcement>(a)) return false;
      const auto& ann = std::get<Announcement>(a);
      return ann.by == agent && !ann.guilty[static_cast<std::size_t>(agent)];
    }
    case Phase::terminal: return false;
  }
  return false;
}

}  // namespace

CopState cop_step(const CopState& s, std::span<const CopAction> joint) {
  if (joint.size() != kAgents) throw DimensionError("COP needs one action per agent");
  if (s.phase == Phase::terminal) throw IllegalActionError("the game is over");
  for (AgentId i = 0; i < kAgents; ++i) {
    const CopAction& a = joint[static_cast<std::size_t>(i)];
    if (!legal_in(s, i, a)) {
      const bool wrong_kind = (s.phase == Phase::communicate) != std::holds_alternative<Message>(a);
      throw IllegalActionError(wrong_kind ? agent_label(i) + " sent the wrong action type for the " + to_string(s.phase) + " phase"
                                          : agent_label(i) + " sent a malformed action");
    }
  }
  CopState next = s;
  if (s.phase == Phase::communicate) {
    for (AgentId sender : s.precedence) {
      Message m = std::get<Message>(joint[static_cast<std::size_t>(sender)]);
      if (m.text.empty()) m.text = render(sender, m);
      next.chat.push_back({s.round, sender, std::move(m)});
    }
    ++next.round;
    if (next.round >= s.rounds) {
      next.phase = Phase::announce;
    } else {
      next.precedence = precedence_for_round(s.precedence_seed, next.round);
    }
    return next;
  }
  for (AgentId i = 0; i < kAgents; ++i) next.announcements[static_cast<std::size_t>(i)] = std::get<Announcement>(joint[static_cast<std::size_t>(i)]);
  next.payoffs = cop_payoffs(next.announcements[0], next.announcements[1], next.announcements[2]);
  next.phase = Phase::terminal;
  return next;
}

CopState CopEnv::transition(const CopState& s, std::span<const CopAction> joint, Rng&) const { return cop_step(s, joint); }

UtilityVector CopEnv::reward(const CopState& prev, const CopState& next) const {
  if (prev.phase == Phase::announce && next.phase == Phase::terminal) return next.payoffs;
  return UtilityVector(kAgents, 0.0);
}

bool CopEnv::is_legal(const CopState& s, AgentId agent, const CopAction& a) const { return legal_in(s, agent, a); }

std::optional<std::vector<CopAction>> CopEnv::legal_actions(const CopState& s, AgentId agent) const {
  std::vector<CopAction> out;
  if (!valid_agent(agent)) return out;
  if (s.phase == Phase::communicate) {
    for (AgentId r : others(agent)) {
      const AgentId t = third(agent, r);
      const std::pair<Template, AgentId> kinds[] = {
          {Template::accuse, r},           {Template::accuse, t},           {Template::sow_doubt, r},
          {Template::sow_doubt, t},        {Template::propose_alliance, r}, {Template::affirm_trust, r},
          {Template::defend_self, -1},     {Template::smalltalk, -1}};
      for (const auto& [kind, target] : kinds) {
        Message m{r, kind, target, ""};
        m.text = render(agent, m);
        out.emplace_back(std::move(m));
      }
    }
  } else if (s.phase == Phase::announce) {
    for (bool g0 : {false, true})
      for (bool g1 : {false, true}) out.emplace_back(make_announcement(agent, g0, g1));
  }
  return out;
}

std::string CopEnv::encode(const CopAction& a) const {
  if (const auto* ann = std::get_if<Announcement>(&a)) return "announce" + announcement_text(*ann);
  const auto& m = std::get<Message>(a);
  std::string out(1, valid_agent(m.recipient) ? agent_letter(m.recipient) : '?');
  out += ":" + to_string(m.kind);
  switch (m.kind) {
    case Template::accuse:
    case Template::sow_doubt:
    case Template::propose_alliance:
    case Template::affirm_trust: out += std::string("(") + (valid_agent(m.target) ? agent_letter(m.target) : '?') + ")"; break;
    case Template::free_text: out += "(" + m.text + ")"; break;
    default: break;
  }
  return out;
}

std::string to_string(Personality p) {
  switch (p) {
    case Personality::con_artist: return "con_artist";
    case Personality::simple_person: return "simple_person";
    case Personality::politician: return "politician";
  }
  return "politician";
}

Personality personality_from_string(const std::string& s) {
  for (Personality p : {Personality::con_artist, Personality::simple_person, Personality::politician})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown personality '" + s + "' (expected con_artist, simple_person or politician)");
}

void PersonalityParams::validate() const {
  if (!(accusation_bias >= 0.0 && accusation_bias <= 10.0)) throw ConfigError("accusation_bias must lie in [0, 10]");
  if (!(trust_decay > 0.0 && trust_decay <= 1.0)) throw ConfigError("trust_decay must lie in (0, 1]");
  if (!(alliance_preference >= 0.0 && alliance_preference <= 10.0)) throw ConfigError("alliance_preference must lie in [0, 10]");
  if (!(honesty_weight >= 0.0 && honesty_weight <= 10.0)) throw ConfigError("honesty_weight must lie in [0, 10]");
  if (!(gullibility >= 0.0 && gullibility <= 10.0)) throw ConfigError("gullibility must lie in [0, 10]");
  if (!(p_both_guilty >= 0.0 && p_both_guilty <= 1.0)) throw ConfigError("p_both_guilty must lie in [0, 1]");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

PersonalityParams default_params(Personality p) {
  PersonalityParams out;
  switch (p) {
    case Personality::con_artist:
      out = {0.5, 1.0, 0.5, 0.0, 0.0, 31.0 / 40.0, 1.0};
      break;
    case Personality::simple_person:
      out = {1.0, 1.0, 3.5, 0.6, 0.6, 2.0 / 40.0, 1.0};
      break;
    case Personality::politician:
      out = {1.0, 0.8, 1.0, 1.5, 0.1, 0.0, 1.0};
      break;
  }
  return out;
}

Evidence gather_evidence(const CopState& s, AgentId agent, double trust_decay) {
  Evidence e;
  for (const auto& entry : s.chat) {
    const Message& m = entry.message;
    if (m.recipient != agent) continue;
    e.empty = false;
    const auto j = static_cast<std::size_t>(entry.sender);
    switch (m.kind) {
      case Template::accuse:
        if (m.target == agent) e.hostile[j] += 1.0;
        else e.reported[static_cast<std::size_t>(m.target)] += 1.0;
        break;
      case Template::sow_doubt:
        if (m.target == agent) {
          e.hostile[j] += 0.5;
        } else {
          e.doubted[static_cast<std::size_t>(m.target)] += 1.0;
          e.manipulative[j] += 1.0;
        }
        break;
      case Template::propose_alliance:
      case Template::affirm_trust:
        e.friendly[j] += std::pow(trust_decay, std::max(0, s.round - entry.round - 1));
        break;
      default: break;
    }
  }
  return e;
}

std::array<double, kAgents> suspicion(const Evidence& e, const PersonalityParams& p, AgentId agent) {
  std::array<double, kAgents> out{};
  for (AgentId j = 0; j < kAgents; ++j) {
    if (j == agent) continue;
    const auto u = static_cast<std::size_t>(j);
    out[u] = p.accusation_bias * (e.hostile[u] + 0.5 * e.reported[u]) + p.gullibility * e.doubted[u] +
             p.honesty_weight * e.manipulative[u] - p.alliance_preference * e.friendly[u];
  }
  return out;
}

ScriptedPolicy::ScriptedPolicy(Personality type, PersonalityParams params) : type_(type), params_(params) {
  params_.validate();
}

std::shared_ptr<ScriptedPolicy> ScriptedPolicy::at_temperature(double tau) const {
  PersonalityParams p = params_;
  p.temperature = tau;
  return std::make_shared<ScriptedPolicy>(type_, p);
}

namespace {

using Scored = std::vector<std::pair<CopAction, double>>;

// Softmax over scores at temperature tau; tau = 0 puts all mass on the first
// maximum. Excluded entries (-inf) get probability 0 and are dropped.
std::vector<double> softmax(const std::vector<double>& scores, double tau) {
  std::vector<double> p(scores.size(), 0.0);
  double best = kExcluded;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > best) {
      best = scores[i];
      arg = i;
    }
  if (best == kExcluded) throw EstimationError("scripted policy has no admissible action");
  if (tau == 0.0) {
    p[arg] = 1.0;
    return p;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == kExcluded) continue;
    p[i] = std::exp((scores[i] - best) / tau);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Message msg(AgentId r, Template kind, AgentId target = -1) { return {r, kind, target, ""}; }

void add(Scored& out, AgentId sender, Message m, double score) {
  m.text = render(sender, m);
  out.emplace_back(std::move(m), score);
}

Scored con_artist_messages(AgentId i, const Evidence& e) {
  Scored out;
  for (AgentId r : others(i)) {
    const AgentId t = third(i, r);
    const auto ur = static_cast<std::size_t>(r);
    add(out, i, msg(r, Template::sow_doubt, t), std::log(3.0));
    add(out, i, msg(r, Template::accuse, t), std::log(2.0));
    add(out, i, msg(r, Template::propose_alliance, r), std::log(2.5));
    add(out, i, msg(r, Template::affirm_trust, r), 0.0);
    add(out, i, msg(r, Template::defend_self), e.hostile[ur] > 0 ? std::log(2.0) : 0.0);
    add(out, i, msg(r, Template::smalltalk), std::log(0.5));
    add(out, i, msg(r, Template::accuse, r), std::log(0.3));
    add(out, i, msg(r, Template::sow_doubt, r), std::log(0.2));
  }
  return out;
}

Scored politician_messages(AgentId i, const Evidence& e, const std::array<double, kAgents>& s, const PersonalityParams& p) {
  Scored out;
  for (AgentId r : others(i)) {
    const AgentId t = third(i, r);
    const auto ur = static_cast<std::size_t>(r), ut = static_cast<std::size_t>(t);
    add(out, i, msg(r, Template::smalltalk), -0.5);
    add(out, i, msg(r, Template::defend_self), -1.0 + p.accusation_bias * e.hostile[ur]);
    add(out, i, msg(r, Template::propose_alliance, r), 0.5 * p.alliance_preference - s[ur]);
    add(out, i, msg(r, Template::affirm_trust, r), -0.5 + p.alliance_preference * e.friendly[ur] - s[ur]);
    add(out, i, msg(r, Template::accuse, t), s[ut] > 0 ? s[ut] - std::max(s[ur], 0.0) : kExcluded);
    add(out, i, msg(r, Template::accuse, r), s[ur] > 0 ? s[ur] - 1.0 : kExcluded);
    add(out, i, msg(r, Template::sow_doubt, t), s[ut] > 0 ? s[ut] - p.honesty_weight : kExcluded);
  }
  return out;
}

Scored simple_person_messages(AgentId i, const Evidence& e, const std::array<double, kAgents>& s,
                              const PersonalityParams& p) {
  Scored out;
  for (AgentId r : others(i)) {
    const AgentId t = third(i, r);
    const auto ur = static_cast<std::size_t>(r), ut = static_cast<std::size_t>(t);
    add(out, i, msg(r, Template::smalltalk), 0.0);
    add(out, i, msg(r, Template::propose_alliance, r), -s[ur]);
    add(out, i, msg(r, Template::affirm_trust, r), e.friendly[ur] > 0 ? -s[ur] : kExcluded);
    add(out, i, msg(r, Template::defend_self), e.hostile[ur] > 0 ? p.accusation_bias * e.hostile[ur] : kExcluded);
    add(out, i, msg(r, Template::accuse, t), s[ut] > 0 ? s[ut] - std::max(s[ur], 0.0) - 0.5 : kExcluded);
    add(out, i, msg(r, Template::accuse, r), s[ur] > 1.0 ? s[ur] - 1.5 : kExcluded);
  }
  return out;
}

}  // namespace

std::vector<std::pair<CopAction, double>> ScriptedPolicy::distribution(const CopState& s, AgentId agent) const {
  if (!valid_agent(agent)) throw ConfigError("agent out of range");
  const Evidence e = gather_evidence(s, agent, params_.trust_decay);
  const auto susp = suspicion(e, params_, agent);
  const double tau = params_.temperature;

  if (s.phase == Phase::communicate) {
    Scored scored;
    switch (type_) {
      case Personality::con_artist: scored = con_artist_messages(agent, e); break;
      case Personality::politician: scored = politician_messages(agent, e, susp, params_); break;
      case Personality::simple_person: scored = simple_person_messages(agent, e, susp, params_); break;
    }
    std::vector<double> scores;
    for (const auto& [a, v] : scored) scores.push_back(v);
    const std::vector<double> p = softmax(scores, tau);
    std::vector<std::pair<CopAction, double>> out;
    for (std::size_t n = 0; n < scored.size(); ++n)
      if (p[n] > 0.0) out.emplace_back(std::move(scored[n].first), p[n]);
    return out;
  }
  if (s.phase == Phase::announce) {
    const auto o = others(agent);
    // Con-artists pin the blame on whoever trusted them most; the others on
    // whoever they suspect most.
    std::vector<double> scores(2);
    for (std::size_t n = 0; n < 2; ++n) {
      const auto u = static_cast<std::size_t>(o[n]);
      scores[n] = type_ == Personality::con_artist ? e.friendly[u] : susp[u];
    }
    const std::vector<double> single = softmax(scores, tau);
    const double both = params_.p_both_guilty;
    std::vector<std::pair<CopAction, double>> out;
    if (both < 1.0) {
      out.emplace_back(make_announcement(agent, true, false), (1.0 - both) * single[0]);
      out.emplace_back(make_announcement(agent, false, true), (1.0 - both) * single[1]);
    }
    if (both > 0.0) out.emplace_back(make_announcement(agent, true, true), both);
    std::erase_if(out, [](const auto& e) { return e.second <= 0.0; });
    return out;
  }
  throw IllegalActionError("no action is possible in a terminal state");
}

CopAction ScriptedPolicy::sample(const CopState& s, AgentId agent, Rng& rng) const {
  auto dist = distribution(s, agent);
  std::vector<double> w;
  w.reserve(dist.size());
  for (const auto& [a, p] : dist) w.push_back(p);
  return std::move(dist[rng.categorical(w)].first);
}

std::optional<double> ScriptedPolicy::prob(const CopState& s, AgentId agent, const CopAction& a) const {
  const CopEnv env;
  const std::string enc = env.encode(a);
  for (const auto& [b, p] : distribution(s, agent))
    if (env.encode(b) == enc) return p;
  return 0.0;
}

std::optional<CopAction> ScriptedPolicy::mode(const CopState& s, AgentId agent) const {
  const CopEnv env;
  auto dist = distribution(s, agent);
  std::size_t best = 0;
  for (std::size_t n = 1; n < dist.size(); ++n) {
    if (dist[n].second > dist[best].second ||
        (dist[n].second == dist[best].second && env.encode(dist[n].first) < env.encode(dist[best].first)))
      best = n;
  }
  return dist[best].first;
}

UtilityVector cop_value_estimate(const CopEnv& env, const std::vector<std::shared_ptr<const Policy<CopState, CopAction>>>& policies,
                                 const CopState& s, int n, Rng& rng) {
  if (env.is_terminal(s)) return s.payoffs;
  if (n < 1) throw ConfigError("value estimation needs at least one rollout");
  if (policies.size() != kAgents) throw ConfigError("COP needs three policies");
  UtilityVector total(kAgents, 0.0);
  std::vector<CopAction> joint(kAgents);
  for (int r = 0; r < n; ++r) {
    CopState state = s;
    while (!env.is_terminal(state)) {
      for (AgentId i = 0; i < kAgents; ++i) joint[static_cast<std::size_t>(i)] = policies[static_cast<std::size_t>(i)]->sample(state, i, rng);
      state = cop_step(state, joint);
    }
    for (std::size_t i = 0; i < kAgents; ++i) total[i] += state.payoffs[i];
  }
  for (double& v : total) v /= n;
  return total;
}

UtilityVector cop_value_estimate(const CopEnv& env, const std::vector<std::shared_ptr<const Policy<CopState, CopAction>>>& policies,
                                 const CopState& s, int n, SeededRng seed) {
  Rng rng = seed.stream(0);
  return cop_value_estimate(env, policies, s, n, rng);
}

CopValue::CopValue(std::shared_ptr<const CopEnv> env, std::vector<std::shared_ptr<const Policy<CopState, CopAction>>> policies,
                   int rollouts)
    : env_(std::move(env)), policies_(std::move(policies)), rollouts_(rollouts) {
  if (rollouts_ < 1) throw ConfigError("value_rollouts must be >= 1");
}

UtilityVector CopValue::evaluate(const CopState& s, Rng& rng) const {
  if (env_->is_terminal(s)) return UtilityVector(kAgents, 0.0);
  return cop_value_estimate(*env_, policies_, s, rollouts_, rng);
}

CopSetup CopSetup::standard() { return {}; }

CopSetup CopSetup::two_politicians() {
  CopSetup s;
  s.types = {Personality::politician, Personality::simple_person, Personality::politician};
  return s;
}

CopGame make_game(const CopSetup& setup) {
  CopGame g;
  auto env = std::make_shared<const CopEnv>(setup.config);
  std::vector<std::shared_ptr<const Policy<CopState, CopAction>>> policies;
  for (AgentId i = 0; i < kAgents; ++i) {
    const Personality type = setup.types[static_cast<std::size_t>(i)];
    PersonalityParams params = default_params(type);
    if (setup.temperature) params.temperature = *setup.temperature;
    policies.push_back(std::make_shared<ScriptedPolicy>(type, params));
    static const char* const kShort[] = {"Con", "Sim", "Pol"};
    g.agent_names.push_back(std::string(1, agent_letter(i)) + "-" + kShort[static_cast<int>(type)]);
  }
  g.env = env;
  g.model.env = env;
  g.model.policies = policies;
  g.model.values = std::make_shared<CopValue>(env, policies, setup.value_rollouts);
  return g;
}

CopSetup setup_from_json(const json& j) {
  try {
    CopSetup s;
    s.config.rounds = j.value("rounds", 4);
    s.config.seed = j.value("seed", std::uint64_t{0});
    s.value_rollouts = j.value("value_rollouts", 8);
    if (j.contains("temperature")) s.temperature = j.at("temperature").get<double>();
    if (j.contains("types")) {
      const auto types = j.at("types").get<std::vector<std::string>>();
      if (types.size() != kAgents) throw ConfigError("COP needs exactly three personality types");
      for (std::size_t i = 0; i < kAgents; ++i) s.types[i] = personality_from_string(types[i]);
    }
    s.config.validate();
    if (s.value_rollouts < 1) throw ConfigError("value_rollouts must be >= 1");
    if (s.temperature && *s.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed COP config: ") + e.what());
  }
}

json action_to_json(const CopAction& a) {
  if (const auto* ann = std::get_if<Announcement>(&a)) {
    json guilty = json::object();
    for (AgentId j : others(ann->by)) guilty[lower_letter(j)] = ann->guilty[static_cast<std::size_t>(j)];
    return {{"type", "announce"}, {"by", std::string(1, agent_letter(ann->by))}, {"guilty", guilty}, {"text", announcement_text(*ann)}};
  }
  const auto& m = std::get<Message>(a);
  json out = {{"type", "message"},
              {"recipient", std::string(1, agent_letter(m.recipient))},
              {"template", to_string(m.kind)},
              {"text", m.text}};
  out["target"] = valid_agent(m.target) ? json(std::string(1, agent_letter(m.target))) : json(nullptr);
  return out;
}

CopAction action_from_json(const json& j, AgentId agent) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "announce") {
      Announcement a;
      a.by = agent;
      const json& g = j.at("guilty");
      for (AgentId o : others(agent)) a.guilty[static_cast<std::size_t>(o)] = g.at(lower_letter(o)).get<bool>();
      return a;
    }
    if (type != "message") throw ConfigError("action type must be 'message' or 'announce'");
    Message m;
    m.recipient = letter_to_agent(j.at("recipient").get<std::string>());
    m.kind = template_from_string(j.at("template").get<std::string>());
    if (j.contains("target") && !j.at("target").is_null()) m.target = letter_to_agent(j.at("target").get<std::string>());
    else if (m.kind == Template::propose_alliance || m.kind == Template::affirm_trust) m.target = m.recipient;
    m.text = j.value("text", std::string());
    if (m.text.empty() && m.kind != Template::free_text && valid_agent(m.recipient)) m.text = render(agent, m);
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed COP action: ") + e.what());
  }
}

json state_to_json(const CopState& s) {
  json j;
  j["game"] = "cop";
  j["round"] = s.round;
  j["rounds"] = s.rounds;
  j["phase"] = to_string(s.phase);
  json prec = json::array();
  for (AgentId a : s.precedence) prec.push_back(std::string(1, agent_letter(a)));
  j["precedence"] = prec;
  json chat = json::array();
  for (const auto& e : s.chat) {
    json m = action_to_json(e.message);
    m.erase("type");
    m["round"] = e.round;
    m["sender"] = std::string(1, agent_letter(e.sender));
    chat.push_back(std::move(m));
  }
  j["chat"] = chat;
  if (s.phase == Phase::terminal) {
    json ann = json::array();
    for (const auto& a : s.announcements) ann.push_back(action_to_json(a));
    j["announcements"] = ann;
    j["payoffs"] = s.payoffs;
  }
  return j;
}

void write_game_log(std::ostream& out, const CopState& s) {
  for (const auto& e : s.chat) {
    json line = {{"round", e.round},
                 {"sender", std::string(1, agent_letter(e.sender))},
                 {"recipient", std::string(1, agent_letter(e.message.recipient))},
                 {"text", e.message.text},
                 {"template", to_string(e.message.kind)}};
    out << to_json_text(line, -1) << '\n';
  }
  if (s.phase != Phase::terminal) return;
  for (const auto& a : s.announcements) {
    json line = {{"round", s.rounds},
                 {"sender", std::string(1, agent_letter(a.by))},
                 {"recipient", nullptr},
                 {"text", announcement_text(a)},
                 {"template", "announce"}};
    out << to_json_text(line, -1) << '\n';
  }
}

}  // namespace mmx::cop
