#pragma once

#include "nntree/network.hpp"

namespace nntree {

struct Phase1Result {
  /// Minimum total violation of the rows A x >= b over the box; zero (up to
  /// rounding) when the system is feasible.
  double objective = 0.0;
  /// Point attaining the minimum, inside the box.
  Vector x;
  int pivots = 0;
};

/// Phase-1 simplex for { x : A x >= b, lo <= x <= hi }.
///
/// Variables are shifted to y = x - lo so that 0 <= y <= hi - lo, upper
/// bounds become rows, and one artificial variable per violated row at y = 0
/// absorbs the infeasibility. Bland's rule picks entering and leaving
/// variables, so the method terminates on degenerate problems. Requires
/// lo <= hi componentwise; throws DimensionError on shape mismatch.
Phase1Result phase1_feasibility(const Matrix& a, const Vector& b, const Vector& lo,
                                const Vector& hi);

}  // namespace nntree
