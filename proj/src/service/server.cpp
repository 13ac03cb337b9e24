#include "mmx/service/server.hpp"

#include <fstream>
#include <regex>

#include <httplib.h>

#include "mmx/games/cop_llm.hpp"

namespace mmx::service {

struct Service::Session {
  std::mutex mu;
  std::string id;
  std::shared_ptr<const AnyGame> game;
  AgentId human = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> log;
  std::ofstream file;

  void record(const json& event) {
    log.push_back(to_json_text(event, -1));
    if (file.is_open()) file << log.back() << '\n' << std::flush;
  }
};

namespace {

Response error(int status, const std::string& message) { return {status, {{"error", message}, {"status", status}}}; }

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("request body is not valid JSON: ") + e.what());
  }
}

template <class F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const cop::LlmError& e) {
    return error(503, e.what());
  } catch (const IllegalActionError& e) {
    return error(409, e.what());
  } catch (const ConstraintViolation& e) {
    return error(409, e.what());
  } catch (const ConfigError& e) {
    return error(422, e.what());
  } catch (const json::exception& e) {
    return error(422, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (options_.k_cap < 1) throw ConfigError("k cap must be >= 1");
  if (options_.workers < 1) throw ConfigError("workers must be >= 1");
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
}

Service::~Service() = default;

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& query) {
  static const std::regex session_route("^/sessions/([A-Za-z0-9_-]+)/(state|candidates|explain|act|log)$");
  if (path == "/sessions") {
    if (method != "POST") return error(405, "use POST /sessions");
    return guarded([&] { return create(body); });
  }
  std::smatch m;
  if (!std::regex_match(path, m, session_route)) return error(404, "no route for " + method + " " + path);
  const auto session = find(m[1]);
  if (!session) return error(404, "unknown session '" + m[1].str() + "'");
  const std::string op = m[2];
  const bool is_get = op == "state" || op == "candidates" || op == "log";
  if (method != (is_get ? "GET" : "POST")) return error(405, "use " + std::string(is_get ? "GET" : "POST") + " for " + op);

  return guarded([&]() -> Response {
    if (op == "explain") return explain(*session, body);
    if (op == "act") return act(*session, body);
    std::shared_ptr<const AnyGame> game;
    std::vector<std::string> log;
    {
      std::lock_guard lock(session->mu);
      game = session->game;
      if (op == "log") log = session->log;
    }
    if (op == "state") {
      const json state = game->state();
      return {200, {{"session_id", session->id}, {"human", game->agents()[static_cast<std::size_t>(session->human)]},
                    {"state", state}, {"state_hash", state_hash(state)}}};
    }
    if (op == "log") {
      json events = json::array();
      for (const auto& line : log) events.push_back(json::parse(line));
      return {200, {{"session_id", session->id}, {"events", events}}};
    }
    auto number = [&](const char* key, long long fallback) {
      const auto it = query.find(key);
      if (it == query.end()) return fallback;
      try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
      } catch (const std::logic_error&) {
        throw ConfigError(std::string("query parameter '") + key + "' must be an integer");
      }
    };
    const long long samples = number("samples", options_.candidate_samples);
    if (samples < 0 || samples > options_.k_cap)
      throw ConfigError("samples must lie in [0, " + std::to_string(options_.k_cap) + "]");
    const auto seed = static_cast<std::uint64_t>(number("seed", 0));
    json c = game->candidates(session->human, static_cast<int>(samples), seed);
    c["session_id"] = session->id;
    return {200, c};
  });
}

Response Service::create(const std::string& body) {
  const json req = parse_body(body);
  if (!req.is_object() || !req.contains("game")) throw ConfigError("body must be {game, config}");
  const std::string game_name = req.at("game").get<std::string>();
  const json config = req.value("config", json::object());
  auto session = std::make_shared<Session>();
  session->game = make_game(game_name, config);
  session->human = session->game->agent_from_json(req.value("human", json(0)));
  session->seed = req.value("seed", std::uint64_t{0});
  {
    std::lock_guard lock(mu_);
    session->id = "s" + std::to_string(next_id_++);
    sessions_[session->id] = session;
  }
  const json state = session->game->state();
  if (options_.log_dir) session->file.open(*options_.log_dir / (session->id + ".jsonl"));
  {
    std::lock_guard lock(session->mu);
    session->record({{"event", "create"},
                     {"session_id", session->id},
                     {"game", game_name},
                     {"config", config},
                     {"human", session->human},
                     {"seed", session->seed},
                     {"state_hash", state_hash(state)}});
  }
  return {201, {{"session_id", session->id}, {"state", state}, {"state_hash", state_hash(state)}}};
}

Response Service::explain(Session& s, const std::string& body) {
  const json req = parse_body(body);
  if (!req.is_object() || !req.contains("type")) throw ConfigError("body must be {type, params}");
  const std::string type = req.at("type").get<std::string>();
  const json params = req.value("params", json::object());
  if (!params.is_object()) throw ConfigError("params must be an object");
  std::shared_ptr<const AnyGame> snapshot;
  {
    std::lock_guard lock(s.mu);
    snapshot = s.game;
  }
  // Explanations read a snapshot; commits replace the session's pointer.
  const std::string before = state_hash(snapshot->state());
  json out = snapshot->explain(type, params, {options_.workers, options_.k_cap, nullptr});
  const std::string after = state_hash(snapshot->state());
  if (before != after) throw Error("explanation changed the session state");
  out["state_hash"] = before;
  return {200, out};
}

Response Service::act(Session& s, const std::string& body) {
  const json req = parse_body(body);
  if (!req.is_object()) throw ConfigError("body must be {action}");
  const json action = req.value("action", json());
  std::lock_guard lock(s.mu);
  std::unique_ptr<AnyGame> next = s.game->clone();
  Rng rng = SeededRng(s.seed).stream(static_cast<std::uint64_t>(next->step()));
  const int step = next->step();
  json out = next->act(s.human, action, rng);
  const std::string hash = state_hash(out.at("state"));
  s.game = std::move(next);
  s.record({{"event", "act"}, {"step", step}, {"action", action}, {"state_hash", hash}});
  out["state_hash"] = hash;
  return {200, out};
}

std::vector<std::string> Service::event_log(const std::string& id) const {
  const auto s = find(id);
  if (!s) throw ConfigError("unknown session '" + id + "'");
  std::lock_guard lock(s->mu);
  return s->log;
}

std::unique_ptr<AnyGame> replay_session(std::istream& in) {
  std::unique_ptr<AnyGame> game;
  AgentId human = 0;
  std::uint64_t seed = 0;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json e = json::parse(line);
    const std::string kind = e.at("event").get<std::string>();
    std::string hash;
    if (kind == "create") {
      game = make_game(e.at("game").get<std::string>(), e.at("config"));
      human = e.at("human").get<AgentId>();
      seed = e.at("seed").get<std::uint64_t>();
      hash = state_hash(game->state());
    } else if (kind == "act") {
      if (!game) throw ConfigError("event log line " + std::to_string(n) + ": act before create");
      if (e.at("step").get<int>() != game->step())
        throw Error("event log line " + std::to_string(n) + ": step out of order");
      Rng rng = SeededRng(seed).stream(static_cast<std::uint64_t>(game->step()));
      hash = state_hash(game->act(human, e.at("action"), rng).at("state"));
    } else {
      throw ConfigError("event log line " + std::to_string(n) + ": unknown event '" + kind + "'");
    }
    if (hash != e.at("state_hash").get<std::string>())
      throw Error("event log line " + std::to_string(n) + ": replayed state hash differs");
  }
  if (!game) throw ConfigError("event log has no create event");
  return game;
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", service.options().cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const Response r = impl_->service.handle(req.method, req.path, req.body, query);
    res.status = r.status;
    res.set_content(to_json_text(r.body, -1), "application/json; charset=utf-8");
  };
  srv.Get(R"(/sessions.*)", forward);
  srv.Post(R"(/sessions.*)", forward);
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace mmx::service
