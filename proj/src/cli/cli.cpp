#include "mmx/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "mmx/eval/eval.hpp"
#include "mmx/service/any_game.hpp"
#include "mmx/service/server.hpp"

namespace mmx::cli {

namespace {

using service::AnyGame;
using service::RunOptions;

struct Common {
  std::string game = "matrix";
  std::string config;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
};

void add_common(CLI::App* s, Common& c) {
  s->add_option("--game", c.game, "matrix, cop or skirmish")->check(CLI::IsMember({"matrix", "cop", "skirmish"}));
  s->add_option("--config", c.config, "game config or board file (JSON)");
  s->add_option("--seed", c.seed, "root seed");
  s->add_option("--workers", c.workers, "rollout worker threads")->check(CLI::PositiveNumber);
  s->add_option("--out", c.out, "output file (default: stdout)");
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in = open_input(path, what);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " '" + path + "' is not valid JSON: " + e.what());
  }
}

std::unique_ptr<AnyGame> load_game(const Common& c) {
  const json config = c.config.empty() ? json::object() : read_json_file(c.config, "config file");
  return service::make_game(c.game, config);
}

// JSON when the text parses, else the raw text as a string.
json loose_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json agent_json(const std::string& text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isdigit(ch); }))
    return std::stoi(text);
  return text;
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file '" + path + "'");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& j, std::ostream& fallback) { write_text(path, to_json_text(j) + "\n", fallback); }

void write_csv_file(const std::string& path, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream s;
  service::write_csv(s, header, rows);
  std::ostream null(nullptr);
  write_text(path, s.str(), null);
}

// "agent=action" pins.
json pins_json(const std::vector<std::string>& pins) {
  json out = json::array();
  for (const auto& p : pins) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("pin '" + p + "' must look like agent=action");
    out.push_back({{"agent", agent_json(p.substr(0, eq))}, {"action", loose_json(p.substr(eq + 1))}});
  }
  return out;
}

struct SimulateArgs {
  int k = 1000;
  int d = 1;
  std::vector<std::string> pins;
  std::string csv;
  std::string trace;
};

struct ExplainArgs {
  std::string op;
  int k = 0;
  int d = 1;
  std::string agent;
  std::string action;
  bool standardize = false;
  int baseline_k = 0;
  int horizon = 3;
  std::string csv;
};

struct CounterfactualArgs {
  std::string query;
  std::string agent;
  std::string reference;
  std::vector<std::string> require;
  std::vector<std::string> forbid;
  std::optional<double> kappa, alpha, beta;
  std::optional<int> top_n, samples, utility_samples;
  bool exact_prob = false;
};

struct ConvergeArgs {
  std::string op;
  std::vector<int> sizes;
  int reps = 50;
  int truth_k = 0;
  int d = 1;
  std::string agent;
  std::string action;
};

struct EvalMapArgs {
  std::string annotations;
  std::string predictions;
  std::string baseline;
  std::string strengths;
  int agents = 0;
  int k = 2;
  std::string annotator;
  std::string relation = "both";
  bool table = false;
};

struct PlayArgs {
  int max_steps = 1000;
  std::string log;
  std::string transcript;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  int k_cap = 5000;
  std::string log_dir;
  std::string cors_origin = "*";
};

int do_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  const auto game = load_game(c);
  json params = {{"k", a.k}, {"d", a.d}, {"seed", c.seed}, {"actions", pins_json(a.pins)}};
  std::ofstream trace;
  if (!a.trace.empty()) {
    trace.open(a.trace, std::ios::binary);
    if (!trace) throw ConfigError("cannot write trace file '" + a.trace + "'");
  }
  const UtilityMatrix x = game->simulate(params, {c.workers, 0, a.trace.empty() ? nullptr : &trace});
  write_json(c.out, service::utility_matrix_json(x, game->agents(), a.k, a.d, c.seed), out);
  if (!a.csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < x.rows(); ++r) rows.emplace_back(x.row(r).begin(), x.row(r).end());
    write_csv_file(a.csv, game->agents(), rows);
  }
  return kExitOk;
}

int do_explain(const Common& c, const ExplainArgs& a, std::ostream& out) {
  const auto game = load_game(c);
  json params = {{"seed", c.seed}, {"d", a.d}, {"standardize", a.standardize}, {"horizon", a.horizon}};
  if (a.k > 0) params["k"] = a.k;
  if (a.baseline_k > 0) params["baseline_k"] = a.baseline_k;
  if (!a.action.empty()) {
    params["agent"] = a.agent.empty() ? json(0) : agent_json(a.agent);
    params["action"] = loose_json(a.action);
  }
  const json j = game->explain(a.op, params, {c.workers, 0, nullptr});
  write_json(c.out, j, out);
  if (!a.csv.empty()) {
    std::vector<std::vector<double>> rows;
    if (a.op == "sica") rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    else if (a.op == "sbue") rows.push_back(j.at("values").get<std::vector<double>>());
    else throw ConfigError("--csv applies to sica and sbue only");
    write_csv_file(a.csv, game->agents(), rows);
  }
  return kExitOk;
}

json constraint_json(const std::string& text, const char* polarity) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("constraint '" + text + "' must look like unit:order");
  return {{"polarity", polarity}, {"unit", text.substr(0, colon)}, {"order", text.substr(colon + 1)}};
}

int do_counterfactual(const Common& c, const CounterfactualArgs& a, std::ostream& out) {
  const auto game = load_game(c);
  json q = a.query.empty() ? json::object() : read_json_file(a.query, "query file");
  if (!q.is_object()) throw ConfigError("query file '" + a.query + "' must hold a JSON object");
  if (!a.agent.empty()) q["agent"] = agent_json(a.agent);
  if (!a.reference.empty()) q["reference_action"] = loose_json(a.reference);
  if (!q.contains("constraints")) q["constraints"] = json::array();
  for (const auto& r : a.require) q["constraints"].push_back(constraint_json(r, "require"));
  for (const auto& f : a.forbid) q["constraints"].push_back(constraint_json(f, "forbid"));
  if (a.kappa) q["kappa"] = *a.kappa;
  if (a.alpha) q["alpha"] = *a.alpha;
  if (a.beta) q["beta"] = *a.beta;
  if (a.top_n) q["top_n"] = *a.top_n;
  if (a.samples) q["samples"] = *a.samples;
  if (a.utility_samples) q["utility_samples"] = *a.utility_samples;
  if (a.exact_prob) q["use_exact_prob"] = true;
  q["seed"] = c.seed;
  if (!q.contains("agent") || !q.contains("reference_action"))
    throw ConfigError("counterfactual needs an agent and a reference action (--agent/--reference or --query)");
  write_json(c.out, game->explain("counterfactual", q, {c.workers, 0, nullptr}), out);
  return kExitOk;
}

int do_converge(const Common& c, const ConvergeArgs& a, std::ostream& out) {
  const auto game = load_game(c);
  json params = {{"sizes", a.sizes}, {"reps", a.reps}, {"seed", c.seed}, {"d", a.d}};
  if (a.truth_k > 0) params["truth_k"] = a.truth_k;
  if (!a.agent.empty()) params["agent"] = agent_json(a.agent);
  if (!a.action.empty()) {
    if (!params.contains("agent")) params["agent"] = 0;
    params["action"] = loose_json(a.action);
  }
  json j = eval::report_to_json(game->converge(a.op, params, {c.workers, 0, nullptr}));
  j["agents"] = game->agents();
  j["seed"] = c.seed;
  write_json(c.out, j, out);
  return kExitOk;
}

std::map<eval::PredictionKey, eval::RankedPrediction> read_predictions(const std::string& path, int agents) {
  std::ifstream in = open_input(path, "predictions file");
  std::map<eval::PredictionKey, eval::RankedPrediction> preds;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const json& sid = j.at("state_id");
      const std::string state = sid.is_string() ? sid.get<std::string>() : sid.dump();
      const AgentId agent = eval::parse_agent(j.at("agent"), agents);
      eval::RankedPrediction p;
      for (const json& f : j.at("friends")) p.friends.push_back(eval::parse_agent(f, agents));
      for (const json& e : j.at("enemies")) p.enemies.push_back(eval::parse_agent(e, agents));
      preds[{state, agent}] = std::move(p);
    } catch (const json::exception& e) {
      throw ConfigError("predictions line " + std::to_string(n) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("predictions line " + std::to_string(n) + ": " + e.what());
    }
  }
  return preds;
}

std::map<std::string, std::vector<double>> read_strengths(const std::string& path) {
  std::ifstream in = open_input(path, "strengths file");
  std::map<std::string, std::vector<double>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const json& sid = j.at("state_id");
      out[sid.is_string() ? sid.get<std::string>() : sid.dump()] = j.at("strength").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError("strengths line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int do_eval_map(const Common& c, const EvalMapArgs& a, std::ostream& out) {
  std::ifstream in = open_input(a.annotations, "annotations file");
  std::vector<eval::AnnotationRecord> records = eval::read_annotations(in, a.agents);
  if (!a.annotator.empty())
    std::erase_if(records, [&](const auto& r) { return r.annotator != a.annotator; });
  if (records.empty()) throw ConfigError("no annotation records to score");
  if (a.predictions.empty() == a.baseline.empty()) throw ConfigError("give exactly one of --predictions or --baseline");

  std::map<eval::PredictionKey, eval::RankedPrediction> preds;
  std::string method;
  if (!a.predictions.empty()) {
    preds = read_predictions(a.predictions, a.agents);
    method = "predictions";
  } else {
    const auto mode = a.baseline == "strength" ? eval::BaselineMode::strength : eval::BaselineMode::random;
    std::map<std::string, std::vector<double>> strengths;
    if (mode == eval::BaselineMode::strength) {
      if (a.strengths.empty()) throw ConfigError("the strength baseline needs --strengths");
      strengths = read_strengths(a.strengths);
    }
    const SeededRng root(c.seed);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const eval::PredictionKey key{r.state_id, r.agent};
      if (preds.contains(key)) continue;
      Rng rng = root.stream(i);
      std::optional<std::vector<double>> s;
      if (mode == eval::BaselineMode::strength) {
        const auto it = strengths.find(r.state_id);
        if (it == strengths.end()) throw ConfigError("no strength vector for state '" + r.state_id + "'");
        s = it->second;
      }
      preds[key] = eval::baseline_ranking(mode, r.agent, a.agents, s, &rng);
    }
    method = a.baseline;
  }

  json j = {{"method", method}, {"k", a.k}, {"annotator", a.annotator}, {"records", records.size()}};
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, rel] : {std::pair{"friends", eval::Relation::friends}, std::pair{"enemies", eval::Relation::enemies}}) {
    if (a.relation != "both" && a.relation != name) continue;
    const auto m = eval::evaluate_map(preds, records, rel, a.k, a.agents);
    j[name] = eval::map_to_json(m);
    std::string bounds = "-";
    if (m.lower) bounds = format_double(*m.lower) + " .. " + format_double(*m.upper);
    rows.push_back({name, format_double(m.value), bounds, std::to_string(m.n)});
  }
  write_json(c.out, j, out);
  if (a.table)
    out << eval::format_table({"relation", "MAP@" + std::to_string(a.k), "bounds", "n"}, rows);
  return kExitOk;
}

int do_play(const Common& c, const PlayArgs& a, std::ostream& out) {
  const auto game = load_game(c);
  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log, std::ios::binary);
    if (!log) throw ConfigError("cannot write log file '" + a.log + "'");
  }
  const SeededRng root(c.seed);
  while (!game->terminal() && game->step() < a.max_steps) {
    Rng rng = root.stream(static_cast<std::uint64_t>(game->step()));
    const int step = game->step();
    json r = game->act(std::nullopt, json(), rng);
    if (log.is_open()) {
      json line = {{"step", step}, {"joint_action", r.at("joint_action")}, {"rewards", r.at("rewards")},
                   {"state_hash", service::state_hash(r.at("state"))}};
      log << to_json_text(line, -1) << '\n';
    }
  }
  if (!a.transcript.empty()) {
    std::ofstream t(a.transcript, std::ios::binary);
    if (!t) throw ConfigError("cannot write transcript file '" + a.transcript + "'");
    game->write_transcript(t);
  }
  const json state = game->state();
  write_json(c.out,
             {{"game", game->kind()}, {"seed", c.seed}, {"steps", game->step()}, {"terminal", game->terminal()},
              {"total_rewards", state.at("total_rewards")}, {"final_state", state}},
             out);
  return kExitOk;
}

int do_serve(const Common& c, const ServeArgs& a, std::ostream& err) {
  service::ServiceOptions o;
  o.k_cap = a.k_cap;
  o.workers = c.workers;
  o.cors_origin = a.cors_origin;
  if (!a.log_dir.empty()) o.log_dir = a.log_dir;
  service::Service svc(o);
  service::HttpServer http(svc);
  const int port = http.bind(a.host, a.port);
  if (port < 0) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  err << "listening on http://" << a.host << ":" << port << std::endl;
  if (!http.run()) throw Error("server stopped with an error");
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explanations for mixed-motive multi-agent games", args.empty() ? "mmx" : args.front()};
  app.require_subcommand(1);

  Common common;
  SimulateArgs sim;
  ExplainArgs ex;
  CounterfactualArgs cf;
  ConvergeArgs conv;
  EvalMapArgs em;
  PlayArgs play;
  ServeArgs serve;

  auto* s_sim = app.add_subcommand("simulate", "write the k*d x p utility matrix of constrained rollouts");
  add_common(s_sim, common);
  s_sim->add_option("--k", sim.k, "rollouts")->check(CLI::PositiveNumber);
  s_sim->add_option("--d", sim.d, "depth")->check(CLI::PositiveNumber);
  s_sim->add_option("--pin", sim.pins, "agent=action pinned at depth 0 (repeatable)");
  s_sim->add_option("--csv", sim.csv, "also write the matrix as CSV");
  s_sim->add_option("--trace", sim.trace, "rollout trace (JSON lines)");

  auto* s_ex = app.add_subcommand("explain", "SBUE, SICA or probable actions for the start state");
  add_common(s_ex, common);
  s_ex->add_option("--op", ex.op, "sbue, sica, probable or trajectory")
      ->required()
      ->check(CLI::IsMember({"sbue", "sica", "probable", "trajectory"}));
  s_ex->add_option("--k", ex.k, "rollouts")->check(CLI::PositiveNumber);
  s_ex->add_option("--d", ex.d, "SICA depth")->check(CLI::PositiveNumber);
  s_ex->add_option("--agent", ex.agent, "acting agent (index or name)");
  s_ex->add_option("--action", ex.action, "explained action (JSON or encoding)");
  s_ex->add_flag("--standardize", ex.standardize, "z-score SBUE against unconstrained rollouts");
  s_ex->add_option("--baseline-k", ex.baseline_k, "rollouts for the standardization baseline")->check(CLI::PositiveNumber);
  s_ex->add_option("--horizon", ex.horizon, "trajectory turns")->check(CLI::PositiveNumber);
  s_ex->add_option("--csv", ex.csv, "also write the matrix (sica) or values (sbue) as CSV");

  auto* s_cf = app.add_subcommand("counterfactual", "similar high-utility alternatives satisfying constraints");
  add_common(s_cf, common);
  s_cf->add_option("--query", cf.query, "query file {agent, reference_action, constraints, kappa, alpha, beta, top_n}");
  s_cf->add_option("--agent", cf.agent, "acting agent");
  s_cf->add_option("--reference", cf.reference, "reference action");
  s_cf->add_option("--require", cf.require, "unit:order that must appear (repeatable)");
  s_cf->add_option("--forbid", cf.forbid, "unit:order that must not appear (repeatable)");
  s_cf->add_option("--kappa", cf.kappa, "probability threshold")->check(CLI::Range(0.0, 1.0));
  s_cf->add_option("--alpha", cf.alpha, "similarity weight")->check(CLI::NonNegativeNumber);
  s_cf->add_option("--beta", cf.beta, "utility weight")->check(CLI::NonNegativeNumber);
  s_cf->add_option("--top-n", cf.top_n, "results to return")->check(CLI::PositiveNumber);
  s_cf->add_option("--samples", cf.samples, "policy draws K")->check(CLI::PositiveNumber);
  s_cf->add_option("--utility-samples", cf.utility_samples, "rollouts per candidate")->check(CLI::PositiveNumber);
  s_cf->add_flag("--exact-prob", cf.exact_prob, "use the policy's exact probabilities when available");

  auto* s_conv = app.add_subcommand("converge", "estimator convergence over sample sizes");
  add_common(s_conv, common);
  s_conv->add_option("--op", conv.op, "sbue or sica")->required()->check(CLI::IsMember({"sbue", "sica"}));
  s_conv->add_option("--sizes", conv.sizes, "comma-separated sample sizes")->required()->delimiter(',');
  s_conv->add_option("--reps", conv.reps, "repetitions per size")->check(CLI::PositiveNumber);
  s_conv->add_option("--truth-k", conv.truth_k, "rollouts for the SBUE reference estimate")->check(CLI::PositiveNumber);
  s_conv->add_option("--d", conv.d, "SICA depth")->check(CLI::PositiveNumber);
  s_conv->add_option("--agent", conv.agent, "pinned agent for SBUE");
  s_conv->add_option("--action", conv.action, "pinned action for SBUE (default: first legal)");

  auto* s_map = app.add_subcommand("eval-map", "MAP@K of relation rankings against annotations");
  add_common(s_map, common);
  s_map->add_option("--annotations", em.annotations, "annotation records (JSON lines)")->required();
  s_map->add_option("--predictions", em.predictions, "predicted rankings (JSON lines)");
  s_map->add_option("--baseline", em.baseline, "random or strength")->check(CLI::IsMember({"random", "strength"}));
  s_map->add_option("--strengths", em.strengths, "strength vectors per state (JSON lines)");
  s_map->add_option("--agents", em.agents, "number of agents")->required()->check(CLI::Range(2, 26));
  s_map->add_option("--k", em.k, "cutoff K")->check(CLI::PositiveNumber);
  s_map->add_option("--annotator", em.annotator, "score against this annotator only");
  s_map->add_option("--relation", em.relation, "friends, enemies or both")->check(CLI::IsMember({"friends", "enemies", "both"}));
  s_map->add_flag("--table", em.table, "print a text table after the JSON");

  auto* s_play = app.add_subcommand("play", "play a headless game with every agent on its policy");
  add_common(s_play, common);
  s_play->add_option("--max-steps", play.max_steps, "step limit")->check(CLI::PositiveNumber);
  s_play->add_option("--log", play.log, "per-step log (JSON lines)");
  s_play->add_option("--transcript", play.transcript, "game transcript (COP chat, JSON lines)");

  auto* s_serve = app.add_subcommand("serve", "run the HTTP session service");
  add_common(s_serve, common);
  s_serve->add_option("--host", serve.host, "bind address");
  s_serve->add_option("--port", serve.port, "port (0 picks one)")->check(CLI::Range(0, 65535));
  s_serve->add_option("--k-cap", serve.k_cap, "largest k a request may ask for")->check(CLI::PositiveNumber);
  s_serve->add_option("--log-dir", serve.log_dir, "directory for session event logs");
  s_serve->add_option("--cors-origin", serve.cors_origin, "Access-Control-Allow-Origin value");

  try {
    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    out << (sub ? sub->help() : app.help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitConfig;
  }

  try {
    if (s_sim->parsed()) return do_simulate(common, sim, out);
    if (s_ex->parsed()) return do_explain(common, ex, out);
    if (s_cf->parsed()) return do_counterfactual(common, cf, out);
    if (s_conv->parsed()) return do_converge(common, conv, out);
    if (s_map->parsed()) return do_eval_map(common, em, out);
    if (s_play->parsed()) return do_play(common, play, out);
    if (s_serve->parsed()) return do_serve(common, serve, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IllegalActionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConstraintViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitConfig;
}

}  // namespace mmx::cli
