#pragma once

#include <cmath>
#include <vector>

#include "mmx/core/environment.hpp"
#include "mmx/core/types.hpp"

namespace mmx {

// Columns whose standard deviation falls below this are treated as constant.
inline constexpr double kEpsilonSigma = 1e-12;

struct BaselineMoments {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<bool> degenerate;
  std::size_t sample_count = 0;

  std::size_t size() const { return mu.size(); }
};

// Returns γ·v_next + r elementwise. Throws EstimationError naming the first
// agent whose value or reward is not finite.
UtilityVector combine_utility(double discount, const UtilityVector& v_next, const UtilityVector& r);

// Utility of one outcome: γ V(s_next) + R(s_prev, s_next).
template <class S, class A>
UtilityVector utility_of_outcome(const Environment<S, A>& env, const ValueFunction<S>& values, const S& s_prev,
                                 const S& s_next, Rng& rng) {
  const UtilityVector r = env.reward(s_prev, s_next);
  const UtilityVector v = values.evaluate(s_next, rng);
  const auto p = static_cast<std::size_t>(env.num_agents());
  if (r.size() != p || v.size() != p) throw DimensionError("reward/value length does not match the number of agents");
  return combine_utility(env.discount(), v, r);
}

// Per-column mean and sample standard deviation (n - 1 denominator).
BaselineMoments column_moments(const UtilityMatrix& x);

struct Standardized {
  UtilityMatrix values;
  std::vector<bool> degenerate;
};

// Maps column j to (x - mu_j) / sigma_j; degenerate columns become 0.
Standardized zscore_standardize(const UtilityMatrix& x, const BaselineMoments& m);

std::vector<double> column_means(const UtilityMatrix& x);

}  // namespace mmx
