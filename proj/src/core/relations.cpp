#include "mmx/core/relations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmx/core/utility.hpp"

namespace mmx {
namespace {

// Fills the matrix from centered cross sums; cov(i,j) = cross[i*p+j].
// Using sxy / sqrt(sxx * syy) makes identical columns give exactly 1 and
// negated columns exactly -1.
RelationMatrix from_cross_sums(std::size_t p, const std::vector<double>& cross, const std::vector<double>& sd) {
  RelationMatrix m;
  m.p = p;
  m.r.assign(p * p, 0.0);
  m.degenerate.assign(p, false);
  for (std::size_t i = 0; i < p; ++i) m.degenerate[i] = !(sd[i] >= kEpsilonSigma);
  for (std::size_t i = 0; i < p; ++i) {
    if (m.degenerate[i]) continue;
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (m.degenerate[j]) continue;
      double v = cross[i * p + j] / std::sqrt(cross[i * p + i] * cross[j * p + j]);
      v = std::clamp(v, -1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace

bool RelationMatrix::any_degenerate() const {
  return std::any_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
}

RelationMatrix pearson_columns(const UtilityMatrix& x) {
  const std::size_t p = x.cols();
  const std::size_t n = x.rows();
  if (n < 2) throw ConfigError("correlation needs at least two samples");
  const std::vector<double> mean = column_means(x);
  std::vector<double> cross(p * p, 0.0);
  std::vector<double> centered(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) centered[c] = x(r, c) - mean[c];
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) cross[i * p + j] += centered[i] * centered[j];
  }
  std::vector<double> sd(p);
  for (std::size_t i = 0; i < p; ++i) sd[i] = std::sqrt(cross[i * p + i] / static_cast<double>(n - 1));
  RelationMatrix m = from_cross_sums(p, cross, sd);
  m.k_used = n;
  m.d_used = 1;
  return m;
}

RelationMatrix weighted_pearson(const std::vector<std::vector<double>>& outcomes, const std::vector<double>& weights) {
  if (outcomes.empty() || outcomes.size() != weights.size()) throw DimensionError("outcomes and weights differ in length");
  const std::size_t p = outcomes.front().size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> mean(p, 0.0);
  for (std::size_t n = 0; n < outcomes.size(); ++n)
    for (std::size_t c = 0; c < p; ++c) mean[c] += weights[n] * outcomes[n][c];
  for (double& m : mean) m /= total;
  std::vector<double> cross(p * p, 0.0);
  for (std::size_t n = 0; n < outcomes.size(); ++n) {
    if (weights[n] == 0.0) continue;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j)
        cross[i * p + j] += weights[n] * (outcomes[n][i] - mean[i]) * (outcomes[n][j] - mean[j]);
  }
  std::vector<double> sd(p);
  for (std::size_t i = 0; i < p; ++i) sd[i] = std::sqrt(std::max(0.0, cross[i * p + i] / total));
  return from_cross_sums(p, cross, sd);
}

RelationRanking rank_by_scores(const std::vector<double>& scores, AgentId agent) {
  std::vector<AgentId> others;
  for (AgentId j = 0; j < static_cast<AgentId>(scores.size()); ++j)
    if (j != agent) others.push_back(j);
  RelationRanking out;
  out.friends = others;
  std::stable_sort(out.friends.begin(), out.friends.end(),
                   [&](AgentId a, AgentId b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
  out.enemies = others;
  std::stable_sort(out.enemies.begin(), out.enemies.end(),
                   [&](AgentId a, AgentId b) { return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)]; });
  return out;
}

RelationRanking rank_relations(const RelationMatrix& m, AgentId agent) {
  if (m.p < 2) throw ConfigError("ranking needs at least two agents");
  if (agent < 0 || static_cast<std::size_t>(agent) >= m.p) throw ConfigError("agent index out of range");
  if (m.degenerate[static_cast<std::size_t>(agent)])
    throw EstimationError(agent_label(agent) + " has constant utility in this sample; rerun with a larger k or depth");
  std::vector<double> row(m.p);
  for (std::size_t j = 0; j < m.p; ++j) row[j] = m(static_cast<std::size_t>(agent), j);
  return rank_by_scores(row, agent);
}

void RelationBands::validate() const {
  if (!(enemy_threshold >= -1.0 && enemy_threshold < 0.0 && friend_threshold > 0.0 && friend_threshold <= 1.0))
    throw ConfigError("relation bands need -1 <= enemy < 0 < friend <= 1");
}

std::string RelationBands::label(double r) const {
  if (r >= friend_threshold) return "friend";
  if (r <= enemy_threshold) return "enemy";
  return "neutral";
}

}  // namespace mmx
