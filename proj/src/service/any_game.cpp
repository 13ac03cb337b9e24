#include "mmx/service/any_game.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <map>

#include "mmx/core/counterfactual.hpp"
#include "mmx/core/explain_json.hpp"
#include "mmx/games/cop.hpp"
#include "mmx/games/cop_llm.hpp"
#include "mmx/games/matrix.hpp"
#include "mmx/games/skirmish.hpp"

namespace mmx::service {

namespace {

constexpr std::size_t kLegalListLimit = 1000;

template <class S, class A>
struct Codec {
  std::function<json(const S&)> state;
  std::function<json(const A&)> action;
  std::function<A(const json&, AgentId)> parse;
  std::function<void(std::ostream&, const S&)> transcript;
};

int checked_k(const json& params, const char* key, int fallback, const RunOptions& options) {
  const int k = params.value(key, fallback);
  if (k < 1) throw ConfigError(std::string(key) + " must be >= 1");
  if (options.k_cap > 0 && k > options.k_cap)
    throw ConfigError(std::string(key) + " = " + std::to_string(k) + " exceeds the cap of " + std::to_string(options.k_cap));
  return k;
}

template <class S, class A>
class TypedGame final : public AnyGame {
 public:
  TypedGame(std::string kind, GameModel<S, A> model, std::vector<std::string> agents, S start, Codec<S, A> codec)
      : kind_(std::move(kind)),
        model_(std::move(model)),
        agents_(std::move(agents)),
        state_(std::move(start)),
        codec_(std::move(codec)),
        totals_(agents_.size(), 0.0) {
    model_.validate();
  }

  const std::string& kind() const override { return kind_; }
  const std::vector<std::string>& agents() const override { return agents_; }
  bool terminal() const override { return model_.env->is_terminal(state_); }
  int step() const override { return step_; }

  json state() const override {
    json j = codec_.state(state_);
    j["step"] = step_;
    j["terminal"] = terminal();
    j["agents"] = agents_;
    j["total_rewards"] = totals_;
    return j;
  }

  json candidates(AgentId agent, int samples, std::uint64_t seed) const override {
    check_agent(agent);
    if (samples < 0) throw ConfigError("samples must be >= 0");
    const auto& env = *model_.env;
    json out;
    out["agent"] = agents_[static_cast<std::size_t>(agent)];
    const auto legal = terminal() ? std::optional<std::vector<A>>(std::vector<A>{}) : env.legal_actions(state_, agent);
    if (legal) {
      json list = json::array();
      for (std::size_t n = 0; n < legal->size() && n < kLegalListLimit; ++n)
        list.push_back({{"action", codec_.action((*legal)[n])}, {"encoding", env.encode((*legal)[n])}});
      out["legal"] = std::move(list);
      out["legal_count"] = legal->size();
      out["legal_truncated"] = legal->size() > kLegalListLimit;
    } else {
      out["legal"] = nullptr;
      out["legal_count"] = nullptr;
      out["legal_truncated"] = false;
    }
    json drawn = json::array();
    if (!terminal() && samples > 0) {
      std::map<std::string, std::pair<A, int>> counts;
      const auto& policy = *model_.policies[static_cast<std::size_t>(agent)];
      const SeededRng root(seed);
      for (int j = 0; j < samples; ++j) {
        Rng rng = root.stream(static_cast<std::uint64_t>(j));
        A a = policy.sample(state_, agent, rng);
        auto [it, inserted] = counts.try_emplace(env.encode(a), a, 0);
        ++it->second.second;
      }
      for (const auto& [enc, entry] : counts)
        drawn.push_back({{"action", codec_.action(entry.first)},
                         {"encoding", enc},
                         {"frequency", static_cast<double>(entry.second) / samples}});
    }
    out["samples"] = std::move(drawn);
    return out;
  }

  json explain(const std::string& type, const json& params, const RunOptions& options) const override {
    if (terminal()) throw IllegalActionError("the game is over; there is nothing to explain");
    const SimulationOptions so{options.workers, options.trace};
    const std::uint64_t seed = params.value("seed", std::uint64_t{0});
    const PinnedActionSet<A> pins = pins_from(params);

    if (type == "sbue") {
      if (pins.empty()) throw ConfigError("sbue needs an action to explain");
      const int k = checked_k(params, "k", 1000, options);
      const bool standardize = params.value("standardize", false);
      std::optional<BaselineMoments> base;
      if (standardize) {
        const int bk = checked_k(params, "baseline_k", std::max(k, 2), options);
        base = baseline_moments(model_, state_, bk, 1, SeededRng(seed).fork(0), so);
      }
      const auto e = sbue(model_, state_, pins, k, standardize, base, SeededRng(seed), so);
      json j = sbue_to_json(e, agents_, {static_cast<std::size_t>(k), 1, seed});
      j["pinned"] = pins_json(pins);
      return j;
    }
    if (type == "sica") {
      const int k = checked_k(params, "k", 2000, options);
      const int d = params.value("d", 1);
      const auto m = sica(model_, state_, k, d, SeededRng(seed), so);
      RelationBands bands;
      bands.friend_threshold = params.value("friend_threshold", bands.friend_threshold);
      bands.enemy_threshold = params.value("enemy_threshold", bands.enemy_threshold);
      bands.validate();
      return sica_to_json(m, agents_, {static_cast<std::size_t>(k), static_cast<std::size_t>(d), seed}, bands);
    }
    if (type == "probable") {
      const int k = checked_k(params, "k", 1000, options);
      json j = probable_to_json(probable_actions(model_, state_, pins, k, SeededRng(seed), so), agents_,
                                {static_cast<std::size_t>(k), 1, seed});
      j["pinned"] = pins_json(pins);
      return j;
    }
    if (type == "trajectory") {
      const int k = checked_k(params, "k", 1000, options);
      const int horizon = params.value("horizon", 3);
      const auto t = probable_trajectory(model_, state_, pins, k, horizon, SeededRng(seed), so);
      json j = trajectory_to_json(*model_.env, t, agents_, {static_cast<std::size_t>(k), static_cast<std::size_t>(horizon), seed});
      json states = json::array();
      for (const auto& s : t.states) states.push_back(codec_.state(s));
      j["states"] = std::move(states);
      j["pinned"] = pins_json(pins);
      return j;
    }
    if (type == "counterfactual") return counterfactual(params, options, so, seed);
    throw ConfigError("unknown explanation type '" + type + "'");
  }

  UtilityMatrix simulate(const json& params, const RunOptions& options) const override {
    const int k = checked_k(params, "k", 1000, options);
    const int d = params.value("d", 1);
    return mmx::simulate(model_, state_, k, d, pins_from(params), SeededRng(params.value("seed", std::uint64_t{0})),
                         SimulationOptions{options.workers, options.trace});
  }

  eval::ConvergenceReport converge(const std::string& op, const json& params, const RunOptions& options) const override {
    const SimulationOptions so{options.workers, nullptr};
    const SeededRng seed(params.value("seed", std::uint64_t{0}));
    const auto sizes = params.at("sizes").get<std::vector<int>>();
    for (int k : sizes)
      if (k < 1) throw ConfigError("sample sizes must be >= 1");
    const int reps = params.value("reps", 50);
    if (op == "sbue") {
      PinnedActionSet<A> pins = pins_from(params);
      if (pins.empty()) {
        const AgentId agent = params.contains("agent") ? agent_from_json(params.at("agent")) : 0;
        pins.add(agent, default_action(agent, seed), 0);
      }
      int largest = 1;
      for (int k : sizes) largest = std::max(largest, k);
      const int truth_k = params.value("truth_k", 10 * largest);
      return eval::sbue_convergence(model_, state_, pins, sizes, reps, truth_k, seed, so);
    }
    if (op == "sica") return eval::sica_convergence(model_, state_, params.value("d", 1), sizes, reps, seed, so);
    throw ConfigError("unknown convergence op '" + op + "'");
  }

  json act(std::optional<AgentId> human, const json& action, Rng& rng) override {
    if (terminal()) throw IllegalActionError("the game is over");
    const auto& env = *model_.env;
    if (human) check_agent(*human);
    std::optional<A> chosen;
    if (human && !action.is_null()) {
      A a = codec_.parse(action, *human);
      if (!env.is_legal(state_, *human, a))
        throw IllegalActionError("action '" + env.encode(a) + "' is not legal for " +
                                 agents_[static_cast<std::size_t>(*human)] + " now");
      chosen = std::move(a);
    }
    std::vector<A> joint;
    for (AgentId i = 0; i < num_agents(); ++i) {
      if (chosen && i == *human) joint.push_back(*chosen);
      else joint.push_back(model_.policies[static_cast<std::size_t>(i)]->sample(state_, i, rng));
    }
    S next = env.transition(state_, joint, rng);
    const UtilityVector r = env.reward(state_, next);
    for (std::size_t i = 0; i < r.size(); ++i) totals_[i] += r[i];
    state_ = std::move(next);
    ++step_;
    json encoded = json::array();
    for (const auto& a : joint) encoded.push_back(codec_.action(a));
    return {{"joint_action", std::move(encoded)}, {"rewards", r}, {"terminal", terminal()}, {"state", state()}};
  }

  std::unique_ptr<AnyGame> clone() const override { return std::make_unique<TypedGame>(*this); }

  void write_transcript(std::ostream& out) const override {
    if (codec_.transcript) codec_.transcript(out, state_);
  }

 private:
  void check_agent(AgentId agent) const {
    if (agent < 0 || agent >= num_agents()) throw ConfigError("no agent with index " + std::to_string(agent));
  }

  PinnedActionSet<A> pins_from(const json& params) const {
    PinnedActionSet<A> pins;
    auto add = [&](const json& e) {
      const AgentId agent = agent_from_json(e.at("agent"));
      pins.add(agent, codec_.parse(e.at("action"), agent), e.value("depth", 0));
    };
    if (params.contains("action")) add(params);
    if (params.contains("actions"))
      for (const json& e : params.at("actions")) add(e);
    return pins;
  }

  json pins_json(const PinnedActionSet<A>& pins) const {
    json out = json::array();
    for (const auto& e : pins.entries())
      out.push_back({{"agent", agents_[static_cast<std::size_t>(e.agent)]},
                     {"action", codec_.action(e.action)},
                     {"encoding", model_.env->encode(e.action)},
                     {"depth", e.depth}});
    return out;
  }

  // Smallest legal encoding, else the policy's mode, else a seeded draw.
  A default_action(AgentId agent, SeededRng seed) const {
    check_agent(agent);
    const auto& env = *model_.env;
    const auto legal = env.legal_actions(state_, agent);
    if (legal && !legal->empty()) {
      const A* best = &legal->front();
      for (const auto& a : *legal)
        if (env.encode(a) < env.encode(*best)) best = &a;
      return *best;
    }
    const auto& policy = *model_.policies[static_cast<std::size_t>(agent)];
    if (auto m = policy.mode(state_, agent)) return *m;
    Rng rng = seed.fork(99).stream(0);
    return policy.sample(state_, agent, rng);
  }

  json counterfactual(const json& params, const RunOptions& options, const SimulationOptions& so, std::uint64_t seed) const {
    const AgentId agent = agent_from_json(params.at("agent"));
    CounterfactualQuery<A> q;
    q.reference = codec_.parse(params.at("reference_action"), agent);
    for (const json& c : params.value("constraints", json::array())) {
      Constraint con;
      const std::string pol = c.at("polarity").get<std::string>();
      if (pol == "require") con.polarity = Polarity::require;
      else if (pol == "forbid") con.polarity = Polarity::forbid;
      else throw ConfigError("constraint polarity must be 'require' or 'forbid', got '" + pol + "'");
      con.sub_order = {c.at("unit").get<std::string>(), c.at("order").get<std::string>()};
      q.constraints.push_back(std::move(con));
    }
    CounterfactualParams cp;
    cp.kappa = params.value("kappa", cp.kappa);
    cp.alpha = params.value("alpha", cp.alpha);
    cp.beta = params.value("beta", cp.beta);
    cp.top_n = params.value("top_n", cp.top_n);
    cp.samples = checked_k(params, "samples", cp.samples, options);
    cp.utility_samples = checked_k(params, "utility_samples", cp.utility_samples, options);
    cp.use_exact_prob = params.value("use_exact_prob", cp.use_exact_prob);
    const auto r = counterfactuals(model_, state_, agent, q, cp, SeededRng(seed), so);

    const auto& env = *model_.env;
    json ranked = json::array();
    for (const auto& c : r.ranked)
      ranked.push_back({{"action", codec_.action(c.action)},
                        {"encoding", c.encoding},
                        {"similarity", c.similarity},
                        {"expected_own_utility", c.expected_own_utility},
                        {"normalized_utility", c.normalized_utility},
                        {"score", c.score}});
    json constraints = json::array();
    for (const auto& c : q.constraints)
      constraints.push_back({{"polarity", c.polarity == Polarity::require ? "require" : "forbid"},
                             {"unit", c.sub_order.unit},
                             {"order", c.sub_order.order}});
    json j;
    j["type"] = "counterfactual";
    j["agents"] = agents_;
    j["values"] = json::array();
    j["matrix"] = json::array();
    j["modal_actions"] = json::array();
    j["query"] = {{"agent", agents_[static_cast<std::size_t>(agent)]},
                  {"reference_action", env.encode(q.reference)},
                  {"constraints", std::move(constraints)},
                  {"kappa", cp.kappa},
                  {"alpha", cp.alpha},
                  {"beta", cp.beta},
                  {"top_n", cp.top_n}};
    j["counterfactuals"] = std::move(ranked);
    j["status"] = to_string(r.status);
    j["feasible_count"] = r.feasible_count;
    j["used_enumeration"] = r.used_enumeration;
    j["meta"] = meta_json({static_cast<std::size_t>(cp.utility_samples), 1, seed});
    j["meta"]["samples"] = cp.samples;
    return j;
  }

  std::string kind_;
  GameModel<S, A> model_;
  std::vector<std::string> agents_;
  S state_;
  Codec<S, A> codec_;
  std::vector<double> totals_;
  int step_ = 0;
};

std::unique_ptr<AnyGame> make_matrix(const json& config) {
  using namespace mmx::matrix;
  std::shared_ptr<const MatrixGame> game;
  std::vector<std::vector<double>> policies;
  if (config.contains("payoffs")) {
    auto loaded = from_json(config);
    game = std::move(loaded.game);
    policies = std::move(loaded.policies);
  } else {
    const json r = config.value("random", json::object());
    Rng rng(r.value("seed", std::uint64_t{0}));
    auto inst = random_instance(r.value("agents", 3), r.value("actions", 2), rng);
    game = std::move(inst.game);
    policies = std::move(inst.policies);
  }
  std::vector<std::string> names;
  for (AgentId i = 0; i < game->num_agents(); ++i) names.push_back(agent_label(i));
  Codec<MatrixState, MatrixAction> codec;
  codec.state = [](const MatrixState& s) {
    return json{{"game", "matrix"}, {"done", s.done}, {"joint", s.joint}};
  };
  codec.action = [](const MatrixAction& a) { return json(a); };
  codec.parse = [](const json& j, AgentId) -> MatrixAction {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (!s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return std::stoi(s);
    }
    throw ConfigError("a matrix-game action is an action index, got " + j.dump());
  };
  return std::make_unique<TypedGame<MatrixState, MatrixAction>>("matrix", make_model(game, policies), std::move(names),
                                                                 game->initial_state(), std::move(codec));
}

std::unique_ptr<AnyGame> make_cop(const json& config) {
  using namespace mmx::cop;
  const CopSetup setup = config.empty() ? CopSetup::standard() : setup_from_json(config);
  CopGame g = make_game(setup);
  // Language-model agents replace the scripted policy for live play and
  // explanation draws; value rollouts keep the scripted policies.
  if (config.contains("llm_agents")) {
    LlmConfig lc = LlmConfig::from_env();
    if (config.contains("llm")) {
      const json& l = config.at("llm");
      lc.url = l.value("url", lc.url);
      lc.path = l.value("path", lc.path);
      lc.model = l.value("model", lc.model);
      lc.temperature = l.value("temperature", lc.temperature);
      lc.max_tokens = l.value("max_tokens", lc.max_tokens);
      lc.timeout_seconds = l.value("timeout", lc.timeout_seconds);
    }
    lc.validate();
    auto client = std::make_shared<const HttpCompletionClient>(lc);
    for (const json& a : config.at("llm_agents")) {
      const std::string name = a.get<std::string>();
      if (name.size() != 1 || name[0] < 'A' || name[0] >= 'A' + kAgents)
        throw ConfigError("llm_agents entries are agent letters, got '" + name + "'");
      const auto idx = static_cast<std::size_t>(name[0] - 'A');
      g.model.policies[idx] = std::make_shared<const LlmPolicy>(client, setup.types[idx], lc);
    }
  }
  Codec<CopState, CopAction> codec;
  codec.state = [](const CopState& s) { return state_to_json(s); };
  codec.action = [](const CopAction& a) { return action_to_json(a); };
  codec.parse = [](const json& j, AgentId agent) { return action_from_json(j, agent); };
  codec.transcript = [](std::ostream& out, const CopState& s) { write_game_log(out, s); };
  const CopState start = g.env->initial_state();
  return std::make_unique<TypedGame<CopState, CopAction>>("cop", std::move(g.model), std::move(g.agent_names), start,
                                                           std::move(codec));
}

const char* kDefaultBoard = R"({
  "agents": 2, "max_turns": 6, "discount": 0.95,
  "territories": [
    {"id": "T1", "owner": 0, "armies": 3, "adjacent": ["T2", "T6", "T4"]},
    {"id": "T2", "owner": 0, "armies": 2, "adjacent": ["T1", "T3"]},
    {"id": "T3", "owner": null, "armies": 1, "adjacent": ["T2", "T4"]},
    {"id": "T4", "owner": 1, "armies": 3, "adjacent": ["T3", "T5", "T1"]},
    {"id": "T5", "owner": 1, "armies": 2, "adjacent": ["T4", "T6"]},
    {"id": "T6", "owner": null, "armies": 1, "adjacent": ["T5", "T1"]}
  ]
})";

std::unique_ptr<AnyGame> make_skirmish(const json& config) {
  using namespace mmx::skirmish;
  SkirmishGame g = game_from_json(config.empty() ? json::parse(kDefaultBoard) : config);
  const auto env = g.env;
  const SkirmishConfig sc = env->config();
  Codec<SkirmishBoard, SkirmishAction> codec;
  codec.state = [sc](const SkirmishBoard& b) {
    json j = board_to_json(b);
    j["game"] = "skirmish";
    j["values"] = heuristic_value(b, sc.agents, sc.territory_weight, sc.army_weight);
    return j;
  };
  codec.action = [env](const SkirmishAction& a) { return action_to_json(*env, a); };
  codec.parse = [env](const json& j, AgentId) { return action_from_json(*env, j); };
  return std::make_unique<TypedGame<SkirmishBoard, SkirmishAction>>("skirmish", std::move(g.model), std::move(g.agent_names),
                                                                     std::move(g.board), std::move(codec));
}

}  // namespace

AgentId AnyGame::agent_from_json(const json& j) const {
  const auto& names = agents();
  if (j.is_number_integer()) {
    const int i = j.get<int>();
    if (i < 0 || i >= num_agents()) throw ConfigError("no agent with index " + std::to_string(i));
    return i;
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == s) return static_cast<AgentId>(i);
    if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0]))) {
      const int i = std::toupper(static_cast<unsigned char>(s[0])) - 'A';
      if (i >= 0 && i < num_agents()) return i;
    }
    throw ConfigError("unknown agent '" + s + "'");
  }
  throw ConfigError("an agent is an index or a name, got " + j.dump());
}

std::unique_ptr<AnyGame> make_game(const std::string& game, const json& config) {
  const json cfg = config.is_null() ? json::object() : config;
  if (!cfg.is_object()) throw ConfigError("game config must be a JSON object");
  try {
    if (game == "matrix") return make_matrix(cfg);
    if (game == "cop") return make_cop(cfg);
    if (game == "skirmish") return make_skirmish(cfg);
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + game + " config: " + e.what());
  }
  throw ConfigError("unknown game '" + game + "' (expected matrix, cop or skirmish)");
}

std::string state_hash(const json& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json_text(state, -1)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_field(header[i]);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

json utility_matrix_json(const UtilityMatrix& x, const std::vector<std::string>& agents, int k, int d, std::uint64_t seed) {
  json rows = json::array();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json j;
  j["type"] = "utility_matrix";
  j["agents"] = agents;
  j["rows"] = x.rows();
  j["cols"] = x.cols();
  j["values"] = std::move(rows);
  j["meta"] = meta_json({static_cast<std::size_t>(k), static_cast<std::size_t>(d), seed});
  return j;
}

}  // namespace mmx::service
