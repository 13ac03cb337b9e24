#pragma once

#include <string>
#include <vector>

#include "mmx/core/types.hpp"

namespace mmx {

// p x p Pearson correlation matrix of agents' utilities. Rows and columns of
// degenerate (constant-utility) agents are zero and flagged in the mask.
struct RelationMatrix {
  std::size_t p = 0;
  std::vector<double> r;  // row-major p*p
  std::vector<bool> degenerate;
  std::size_t k_used = 0;
  std::size_t d_used = 0;

  double operator()(std::size_t i, std::size_t j) const { return r[i * p + j]; }
  double& operator()(std::size_t i, std::size_t j) { return r[i * p + j]; }
  bool any_degenerate() const;
};

// Sample Pearson correlation over the columns of x.
RelationMatrix pearson_columns(const UtilityMatrix& x);

// Correlation from a weighted outcome distribution (population moments).
// outcomes[n] is one utility vector, weights[n] its probability.
RelationMatrix weighted_pearson(const std::vector<std::vector<double>>& outcomes, const std::vector<double>& weights);

struct RelationRanking {
  std::vector<AgentId> friends;   // most friendly first
  std::vector<AgentId> enemies;   // most hostile first
};

// Orders the other agents by their shared coefficient with `agent`:
// descending for friendliness, ascending for hostility, ties by AgentId.
RelationRanking rank_relations(const RelationMatrix& m, AgentId agent);

// Same ordering from an arbitrary score per agent (scores[agent] ignored).
RelationRanking rank_by_scores(const std::vector<double>& scores, AgentId agent);

// Presentation bands for labeling coefficients. Never used by metrics.
struct RelationBands {
  double friend_threshold = 0.3;
  double enemy_threshold = -0.3;

  void validate() const;
  std::string label(double r) const;
};

}  // namespace mmx
