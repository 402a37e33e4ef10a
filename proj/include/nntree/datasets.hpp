#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nntree/network.hpp"

namespace nntree {

/// Seeded generator whose draws are identical on every platform: the engine
/// is mt19937_64 and the conversions to real numbers are done here rather
/// than by the implementation-defined standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }
  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct Dataset {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Vector> inputs;
  /// Regression targets, or a single 0/1 entry per point for classification.
  std::vector<Vector> targets;

  std::size_t size() const noexcept { return inputs.size(); }
  int input_dim() const noexcept {
    return inputs.empty() ? 0 : static_cast<int>(inputs.front().size());
  }
};

/// n points regularly spaced on [lo, hi] including both ends, y = x^2.
/// Throws std::invalid_argument when n < 2.
Dataset gen_parabola(int n = 5000, double lo = -2.5, double hi = 2.5);

/// Two interleaved unit half circles: the upper one (label 0) centred at the
/// origin, the lower one (label 1) centred at (1, 0.5) and flipped. Each
/// point gets N(0, noise^2) jitter per coordinate. n must be even.
Dataset gen_halfmoons(int n = 1000, double noise = 0.1, std::uint64_t seed = 0);

}  // namespace nntree
