#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nntree {

/// Region chosen for a pre-activation value together with the affine piece
/// that applies there.
struct RegionChoice {
  int region = 0;
  double slope = 1.0;
  double intercept = 0.0;
  /// Breakpoint comparisons executed to find the region.
  int comparisons = 0;
};

/// Region index of `z` for ascending `breakpoints` t_0 < ... < t_{k-2}.
///
/// Region j covers [t_{j-1}, t_j) with t_{-1} = -inf and t_{k-1} = +inf, so a
/// value sitting exactly on a breakpoint belongs to the upper region. The scan
/// runs upward from t_0 and stops at the first breakpoint strictly greater
/// than `z`; every evaluator in the library (reference forward pass, lazy
/// evaluation, tree walk) goes through this routine so ties resolve the same
/// way everywhere.
int select_region(std::span<const double> breakpoints, double z,
                  int* comparisons = nullptr);

/// Continuous piecewise-linear scalar activation with k >= 1 affine pieces.
class PwlActivation {
 public:
  /// Throws std::invalid_argument when breakpoints are not strictly
  /// increasing, piece counts disagree, or adjacent pieces do not meet within
  /// 1e-9 at a breakpoint. Empty `intercepts` means all zero.
  PwlActivation(std::string name, std::vector<double> breakpoints,
                std::vector<double> slopes, std::vector<double> intercepts = {});

  static PwlActivation identity();
  static PwlActivation relu();
  static PwlActivation leaky_relu(double negative_slope = 0.3);
  static PwlActivation hard_tanh();

  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  const std::vector<double>& intercepts() const noexcept { return intercepts_; }

  int regions() const noexcept { return static_cast<int>(slopes_.size()); }
  bool is_linear() const noexcept { return slopes_.size() == 1; }

  RegionChoice select(double z) const;
  double operator()(double z) const;

  friend bool operator==(const PwlActivation&, const PwlActivation&) = default;

 private:
  std::string name_;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
};

inline RegionChoice region_select(const PwlActivation& act, double z) {
  return act.select(z);
}

struct QuantizedActivation {
  PwlActivation activation;
  double max_error = 0.0;
};

/// Piecewise-linear interpolant of `f` on [lo, hi].
///
/// The domain is cut into `segments` equal pieces whose lines pass through f
/// at the cut points; outside [lo, hi] the activation is held flat at f(lo)
/// and f(hi). The result therefore has segments + 2 regions. `max_error` is
/// sup |f - pwl| on a uniform grid of 1000 * segments + 1 points over the
/// domain.
QuantizedActivation quantize_activation(const std::function<double(double)>& f,
                                        int segments, double lo, double hi,
                                        std::string name = "quantized");

/// tanh quantized to exactly `regions` pieces (regions >= 3) over [lo, hi].
PwlActivation quantized_tanh(int regions, double lo = -3.0, double hi = 3.0);

}  // namespace nntree
