#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mmx {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Random stream for one rollout. Draw methods avoid the std distributions so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Index drawn proportionally to non-negative weights. Falls back to the
  // last positive weight on rounding at the top of the range.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

// Root seed plus counter-based stream derivation: stream(j) depends only on
// (root, j), so results do not depend on how rollouts are scheduled.
class SeededRng {
 public:
  constexpr explicit SeededRng(std::uint64_t root = 0) : root_(root) {}

  constexpr std::uint64_t root() const { return root_; }

  Rng stream(std::uint64_t index) const { return Rng(mix64(root_ ^ mix64(index + 0x632BE59BD9B4E019ULL))); }

  // Child seed for an independent sub-experiment (e.g. one repetition).
  constexpr SeededRng fork(std::uint64_t tag) const {
    return SeededRng(mix64(mix64(root_) + 0xD1B54A32D192ED03ULL * (tag + 1)));
  }

 private:
  std::uint64_t root_;
};

}  // namespace mmx
