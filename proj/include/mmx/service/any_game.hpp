#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmx/core/json_text.hpp"
#include "mmx/core/types.hpp"
#include "mmx/eval/eval.hpp"

// Game-independent front end shared by the CLI and the HTTP service. Actions
// and states cross this boundary as JSON; everything else stays typed.
namespace mmx::service {

struct RunOptions {
  int workers = 1;
  int k_cap = 0;  // 0 = unbounded
  std::ostream* trace = nullptr;
};

class AnyGame {
 public:
  virtual ~AnyGame() = default;

  virtual const std::string& kind() const = 0;
  virtual const std::vector<std::string>& agents() const = 0;
  int num_agents() const { return static_cast<int>(agents().size()); }

  virtual json state() const = 0;
  virtual bool terminal() const = 0;
  virtual int step() const = 0;

  // Agent given as index, exact name, or leading letter ("B").
  AgentId agent_from_json(const json& j) const;

  // {agent, legal (null when not enumerable), legal_count, samples:[{action, encoding, frequency}]}.
  virtual json candidates(AgentId agent, int samples, std::uint64_t seed) const = 0;

  // type: sbue | sica | probable | trajectory | counterfactual.
  virtual json explain(const std::string& type, const json& params, const RunOptions& options) const = 0;

  // Unconstrained or pinned rollouts: params {k, d, seed, actions}.
  virtual UtilityMatrix simulate(const json& params, const RunOptions& options) const = 0;

  // params {sizes, reps, seed, truth_k, d, agent, action}.
  virtual eval::ConvergenceReport converge(const std::string& op, const json& params, const RunOptions& options) const = 0;

  // Applies `human`'s action (or a policy draw when `action` is null) and a
  // policy draw for everyone else. Returns {joint_action, rewards, terminal, state}.
  virtual json act(std::optional<AgentId> human, const json& action, Rng& rng) = 0;

  virtual std::unique_ptr<AnyGame> clone() const = 0;

  // Game-specific transcript (COP chat log); nothing by default.
  virtual void write_transcript(std::ostream&) const {}
};

// game: matrix | cop | skirmish. An empty config selects the built-in
// default for that game.
std::unique_ptr<AnyGame> make_game(const std::string& game, const json& config);

// FNV-1a over the compact JSON text, as 16 hex digits.
std::string state_hash(const json& state);

// Header row of names, then one row per matrix row at 17 significant digits.
void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

json utility_matrix_json(const UtilityMatrix& x, const std::vector<std::string>& agents, int k, int d, std::uint64_t seed);

}  // namespace mmx::service
