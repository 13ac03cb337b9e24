#include "mmx/core/utility.hpp"

#include <string>

namespace mmx {

UtilityVector combine_utility(double discount, const UtilityVector& v_next, const UtilityVector& r) {
  if (v_next.size() != r.size()) throw DimensionError("value and reward vectors differ in length");
  UtilityVector out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(v_next[i]) || !std::isfinite(r[i]))
      throw EstimationError("non-finite value or reward for " + agent_label(static_cast<AgentId>(i)));
    out[i] = discount * v_next[i] + r[i];
    if (!std::isfinite(out[i]))
      throw EstimationError("non-finite utility for " + agent_label(static_cast<AgentId>(i)));
  }
  return out;
}

std::vector<double> column_means(const UtilityMatrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  if (x.rows() == 0) return mean;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

BaselineMoments column_moments(const UtilityMatrix& x) {
  BaselineMoments m;
  m.sample_count = x.rows();
  m.mu = column_means(x);
  m.sigma.assign(x.cols(), 0.0);
  m.degenerate.assign(x.cols(), true);
  if (x.rows() < 2) return m;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double dev = x(r, c) - m.mu[c];
      ss += dev * dev;
    }
    m.sigma[c] = std::sqrt(ss / static_cast<double>(x.rows() - 1));
    m.degenerate[c] = m.sigma[c] < kEpsilonSigma;
  }
  return m;
}

Standardized zscore_standardize(const UtilityMatrix& x, const BaselineMoments& m) {
  if (x.cols() != m.mu.size() || x.cols() != m.sigma.size())
    throw DimensionError("utility matrix has " + std::to_string(x.cols()) + " columns but baseline has " +
                         std::to_string(m.mu.size()));
  Standardized out{UtilityMatrix(x.rows(), x.cols()), std::vector<bool>(x.cols(), false)};
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const bool degenerate = m.sigma[c] < kEpsilonSigma || (c < m.degenerate.size() && m.degenerate[c]);
    out.degenerate[c] = degenerate;
    if (degenerate) continue;
    for (std::size_t r = 0; r < x.rows(); ++r) out.values(r, c) = (x(r, c) - m.mu[c]) / m.sigma[c];
  }
  return out;
}

}  // namespace mmx
