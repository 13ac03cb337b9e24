#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmx/core/explain.hpp"
#include "mmx/core/json_text.hpp"

// Estimator convergence diagnostics and ranking-quality metrics.
namespace mmx::eval {

struct ConvergenceReport {
  std::string op;  // "sbue" or "sica"
  std::vector<int> sizes;
  int reps = 0;
  int truth_k = 0;  // sbue only
  int depth = 1;    // sica only
  std::vector<std::vector<double>> rmse;  // [size][agent], sbue only
  std::vector<double> cosine;             // [size], sica only
  std::vector<int> excluded;              // degenerate estimates dropped, per size
};

json report_to_json(const ConvergenceReport& r);

// Cosine similarity of two equal-length vectors; 0 when either is zero.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Root mean square of (estimates[r] - truth) per agent.
std::vector<double> rmse(const std::vector<UtilityVector>& estimates, const UtilityVector& truth);

// Mean cosine similarity over all pairs of flattened matrices.
double mean_pairwise_cosine(const std::vector<RelationMatrix>& ms);

// Truth: one SBUE estimate with truth_k (seed.fork(0)). Size i, repetition r
// uses seed.fork(1 + i).fork(r).
template <class S, class A>
ConvergenceReport sbue_convergence(const GameModel<S, A>& model, const S& s, const PinnedActionSet<A>& explained,
                                   const std::vector<int>& sizes, int reps, int truth_k, SeededRng seed,
                                   const SimulationOptions& options = {}) {
  if (sizes.empty()) throw ConfigError("convergence needs at least one sample size");
  if (reps < 1 || truth_k < 1) throw ConfigError("reps and truth_k must be >= 1");
  ConvergenceReport out;
  out.op = "sbue";
  out.sizes = sizes;
  out.reps = reps;
  out.truth_k = truth_k;
  const UtilityVector truth = sbue(model, s, explained, truth_k, false, std::nullopt, seed.fork(0), options).expected_utility;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const SeededRng size_seed = seed.fork(1 + i);
    std::vector<UtilityVector> est;
    for (int r = 0; r < reps; ++r)
      est.push_back(sbue(model, s, explained, sizes[i], false, std::nullopt, size_seed.fork(static_cast<std::uint64_t>(r)), options)
                        .expected_utility);
    out.rmse.push_back(rmse(est, truth));
    out.excluded.push_back(0);
  }
  return out;
}

// Size i, repetition r uses seed.fork(1 + i).fork(r). Matrices with a
// degenerate agent are dropped and counted.
template <class S, class A>
ConvergenceReport sica_convergence(const GameModel<S, A>& model, const S& s, int d, const std::vector<int>& sizes, int reps,
                                   SeededRng seed, const SimulationOptions& options = {}) {
  if (sizes.empty()) throw ConfigError("convergence needs at least one sample size");
  if (reps < 2) throw ConfigError("SICA convergence needs reps >= 2");
  ConvergenceReport out;
  out.op = "sica";
  out.sizes = sizes;
  out.reps = reps;
  out.depth = d;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const SeededRng size_seed = seed.fork(1 + i);
    std::vector<RelationMatrix> ms;
    int dropped = 0;
    for (int r = 0; r < reps; ++r) {
      RelationMatrix m = sica(model, s, sizes[i], d, size_seed.fork(static_cast<std::uint64_t>(r)), options);
      if (m.any_degenerate()) ++dropped;
      else ms.push_back(std::move(m));
    }
    out.cosine.push_back(ms.size() >= 2 ? mean_pairwise_cosine(ms) : NAN);
    out.excluded.push_back(dropped);
  }
  return out;
}

struct ApResult {
  double value = 0.0;
  bool empty_reference = false;
};

// AP@K = sum_{i<=K} precision@i * rel(i) / min(K, |reference|).
ApResult average_precision_at_k(const std::vector<AgentId>& predicted, const std::vector<AgentId>& reference, int k);

// A ranking where some slots may be left unfilled.
using PartialRanking = std::vector<std::optional<AgentId>>;

struct AnnotationRecord {
  std::string state_id;
  std::string annotator;
  AgentId agent = 0;  // the acting agent whose friends and enemies are ranked
  PartialRanking friends;
  PartialRanking enemies;
};

// Checks list lengths (1-2), duplicates, overlap and the acting agent.
void validate(const AnnotationRecord& r, int num_agents);

// {state_id, annotator, agent, friends:[...], enemies:[...]} per line;
// agents are integers or letters, null marks an unfilled slot. Blank lines
// are skipped. Errors name the line.
std::vector<AnnotationRecord> read_annotations(std::istream& in, int num_agents);
AgentId parse_agent(const json& j, int num_agents);

std::vector<AgentId> filled(const PartialRanking& r);

struct MapScore {
  double value = 0.0;
  int k = 0;
  std::size_t n = 0;
  std::size_t empty_references = 0;
  std::optional<double> lower;
  std::optional<double> upper;
};

json map_to_json(const MapScore& m);

struct MapBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Min and max AP@K over every way of filling the unfilled reference slots
// with distinct agents from `pool` that are not already listed. Leaving a
// slot empty counts as one of the ways, so the as-annotated AP lies inside.
MapBounds ap_bounds(const std::vector<AgentId>& predicted, const PartialRanking& reference, const std::vector<AgentId>& pool,
                    int k);

// Per-record bounds averaged; the MAP of any completion lies in between.
MapBounds map_bounds(const std::vector<std::vector<AgentId>>& predicted, const std::vector<PartialRanking>& references,
                     const std::vector<std::vector<AgentId>>& pools, int k);

enum class Relation { friends, enemies };

struct RankedPrediction {
  std::vector<AgentId> friends;
  std::vector<AgentId> enemies;
};

using PredictionKey = std::pair<std::string, AgentId>;  // (state_id, acting agent)

// MAP of predictions against one annotator's records. Unfilled reference
// slots contribute bounds over completions from the non-acting agents not
// listed in either of the reference's lists.
MapScore evaluate_map(const std::map<PredictionKey, RankedPrediction>& predictions,
                      const std::vector<AnnotationRecord>& references, Relation relation, int k, int num_agents);

// Shannon entropy (natural log) of a share vector.
double strength_entropy(const std::vector<double>& shares);

// Tertile band (0 low, 1 middle, 2 high) for each value; equal counts up to
// rounding, ties broken by input position.
std::vector<int> entropy_bands(const std::vector<double>& values);

enum class BaselineMode { random, strength };

// Friends ranking for `agent`: strength descending (AgentId tie-break) or a
// seeded shuffle; enemies are the reverse.
RankedPrediction baseline_ranking(BaselineMode mode, AgentId agent, int num_agents, const std::optional<std::vector<double>>& strength,
                                  Rng* rng);

// Exact E[AP@K] when the m candidates are ranked uniformly at random and r of
// them are relevant.
double expected_random_ap(int m, int r, int k);

// Aligned plain-text table.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace mmx::eval
