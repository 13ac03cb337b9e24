#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmx/service/any_game.hpp"

// HTTP/JSON session API:
//   POST /sessions                   {game, config, human?, seed?}
//   GET  /sessions/{id}/state
//   GET  /sessions/{id}/candidates   ?samples=&seed=
//   POST /sessions/{id}/explain      {type, params}
//   POST /sessions/{id}/act          {action}
//   GET  /sessions/{id}/log
// Errors: 404 unknown session or route, 409 action illegal in phase, 422
// malformed body, 503 language-model failure.
namespace mmx::service {

struct ServiceOptions {
  int k_cap = 5000;
  int workers = 1;
  int candidate_samples = 20;
  std::string cors_origin = "*";
  std::optional<std::filesystem::path> log_dir;  // one <id>.jsonl per session
};

struct Response {
  int status = 200;
  json body;
};

class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();

  // Routes one request. `query` holds URL parameters. Thread-safe.
  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& query = {});

  // JSON-lines event log of a session.
  std::vector<std::string> event_log(const std::string& id) const;

  const ServiceOptions& options() const { return options_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  Response create(const std::string& body);
  Response explain(Session& s, const std::string& body);
  Response act(Session& s, const std::string& body);

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// Rebuilds the game of a session from its event log, re-drawing every
// policy action from the recorded seed. Throws Error when a recorded state
// hash does not match.
std::unique_ptr<AnyGame> replay_session(std::istream& log);

// Serves a Service over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mmx::service
