#include "nntree/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nntree {

int select_region(std::span<const double> breakpoints, double z, int* comparisons) {
  int region = 0;
  int tests = 0;
  for (double t : breakpoints) {
    ++tests;
    if (z < t) break;
    ++region;
  }
  if (comparisons != nullptr) *comparisons = tests;
  return region;
}

PwlActivation::PwlActivation(std::string name, std::vector<double> breakpoints,
                             std::vector<double> slopes, std::vector<double> intercepts)
    : name_(std::move(name)),
      breakpoints_(std::move(breakpoints)),
      slopes_(std::move(slopes)),
      intercepts_(std::move(intercepts)) {
  if (slopes_.empty()) {
    throw std::invalid_argument("activation '" + name_ + "': needs at least one region");
  }
  if (intercepts_.empty()) intercepts_.assign(slopes_.size(), 0.0);
  if (breakpoints_.size() + 1 != slopes_.size() || intercepts_.size() != slopes_.size()) {
    throw std::invalid_argument("activation '" + name_ +
                                "': expected k-1 breakpoints and k slopes/intercepts");
  }
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    const double t = breakpoints_[j];
    if (!std::isfinite(t)) {
      throw std::invalid_argument("activation '" + name_ + "': non-finite breakpoint");
    }
    if (j > 0 && !(breakpoints_[j - 1] < t)) {
      throw std::invalid_argument("activation '" + name_ +
                                  "': breakpoints must be strictly increasing");
    }
    const double left = slopes_[j] * t + intercepts_[j];
    const double right = slopes_[j + 1] * t + intercepts_[j + 1];
    if (std::abs(left - right) > 1e-9) {
      throw std::invalid_argument("activation '" + name_ + "': discontinuous at breakpoint " +
                                  std::to_string(t));
    }
  }
}

PwlActivation PwlActivation::identity() { return PwlActivation("identity", {}, {1.0}); }

PwlActivation PwlActivation::relu() { return PwlActivation("relu", {0.0}, {0.0, 1.0}); }

PwlActivation PwlActivation::leaky_relu(double negative_slope) {
  return PwlActivation("leaky_relu", {0.0}, {negative_slope, 1.0});
}

PwlActivation PwlActivation::hard_tanh() {
  return PwlActivation("hard_tanh", {-1.0, 1.0}, {0.0, 1.0, 0.0}, {-1.0, 0.0, 1.0});
}

RegionChoice PwlActivation::select(double z) const {
  RegionChoice choice;
  choice.region = select_region(breakpoints_, z, &choice.comparisons);
  choice.slope = slopes_[choice.region];
  choice.intercept = intercepts_[choice.region];
  return choice;
}

double PwlActivation::operator()(double z) const {
  const RegionChoice c = select(z);
  return c.slope * z + c.intercept;
}

QuantizedActivation quantize_activation(const std::function<double(double)>& f, int segments,
                                        double lo, double hi, std::string name) {
  if (segments < 1) throw std::invalid_argument("quantize_activation: segments must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("quantize_activation: requires lo < hi");

  const double step = (hi - lo) / segments;
  std::vector<double> knots(segments + 1);
  std::vector<double> values(segments + 1);
  for (int j = 0; j <= segments; ++j) {
    knots[j] = j == segments ? hi : lo + j * step;
    values[j] = f(knots[j]);
  }

  std::vector<double> slopes{0.0};
  std::vector<double> intercepts{values.front()};
  for (int j = 0; j < segments; ++j) {
    const double s = (values[j + 1] - values[j]) / (knots[j + 1] - knots[j]);
    slopes.push_back(s);
    intercepts.push_back(values[j] - s * knots[j]);
  }
  slopes.push_back(0.0);
  intercepts.push_back(values.back());

  PwlActivation act(std::move(name), knots, std::move(slopes), std::move(intercepts));

  const long samples = 1000L * segments;
  double worst = 0.0;
  for (long i = 0; i <= samples; ++i) {
    const double x = i == samples ? hi : lo + (hi - lo) * static_cast<double>(i) / samples;
    worst = std::max(worst, std::abs(f(x) - act(x)));
  }
  return {std::move(act), worst};
}

PwlActivation quantized_tanh(int regions, double lo, double hi) {
  if (regions < 3) throw std::invalid_argument("quantized_tanh: needs at least 3 regions");
  auto q = quantize_activation([](double z) { return std::tanh(z); }, regions - 2, lo, hi,
                               "quantized_tanh");
  return std::move(q.activation);
}

}  // namespace nntree
