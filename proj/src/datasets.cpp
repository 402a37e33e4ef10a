#include "nntree/datasets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nntree {

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(i)]);
  return p;
}

Dataset gen_parabola(int n, double lo, double hi) {
  if (n < 2) throw std::invalid_argument("gen_parabola: n must be at least 2");
  Dataset data;
  data.name = "parabola";
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = i == n - 1 ? hi : lo + step * i;
    data.inputs.push_back(Vector::Constant(1, x));
    data.targets.push_back(Vector::Constant(1, x * x));
  }
  return data;
}

Dataset gen_halfmoons(int n, double noise, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_halfmoons: n must be even and >= 2");
  Dataset data;
  data.name = "halfmoon";
  data.seed = seed;
  Rng rng(seed);
  const int half = n / 2;
  for (int moon = 0; moon < 2; ++moon) {
    for (int i = 0; i < half; ++i) {
      const double angle = half == 1 ? 0.0 : std::numbers::pi * i / (half - 1);
      Vector p(2);
      if (moon == 0) {
        p << std::cos(angle), std::sin(angle);
      } else {
        p << 1.0 - std::cos(angle), 0.5 - std::sin(angle);
      }
      data.inputs.push_back(p);
      data.targets.push_back(Vector::Constant(1, moon));
    }
  }
  if (noise > 0) {
    for (Vector& p : data.inputs) {
      p[0] += noise * rng.normal();
      p[1] += noise * rng.normal();
    }
  }
  return data;
}

}  // namespace nntree
