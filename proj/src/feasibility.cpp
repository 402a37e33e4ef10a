#include "nntree/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nntree/errors.hpp"

namespace nntree {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-12;

}  // namespace

Phase1Result phase1_feasibility(const Matrix& a, const Vector& b, const Vector& lo,
                                const Vector& hi) {
  const int n = static_cast<int>(a.cols());
  const int m = static_cast<int>(a.rows());
  if (b.size() != m || lo.size() != n || hi.size() != n) {
    throw DimensionError("phase1_feasibility: operand shapes disagree");
  }
  for (int j = 0; j < n; ++j) {
    if (!(lo[j] <= hi[j])) throw DimensionError("phase1_feasibility: empty box");
  }

  // Rows: A y >= b - A lo, then -y_j >= -(hi_j - lo_j).
  const int rows = m + n;
  Matrix g = Matrix::Zero(rows, n);
  Vector rhs(rows);
  g.topRows(m) = a;
  rhs.head(m) = b - a * lo;
  for (int j = 0; j < n; ++j) {
    g(m + j, j) = -1.0;
    rhs[m + j] = -(hi[j] - lo[j]);
  }

  // g y - s = rhs. Rows with rhs <= 0 start with their slack basic; the
  // others need an artificial.
  std::vector<int> artificial_row;
  for (int i = 0; i < rows; ++i) {
    if (rhs[i] > 0) artificial_row.push_back(i);
  }
  const int n_art = static_cast<int>(artificial_row.size());
  const int cols = n + rows + n_art;
  Matrix t = Matrix::Zero(rows + 1, cols + 1);
  std::vector<int> basis(rows);
  int art = 0;
  for (int i = 0; i < rows; ++i) {
    if (rhs[i] > 0) {
      t.row(i).head(n) = g.row(i);
      t(i, n + i) = -1.0;
      t(i, n + rows + art) = 1.0;
      t(i, cols) = rhs[i];
      basis[i] = n + rows + art;
      ++art;
    } else {
      t.row(i).head(n) = -g.row(i);
      t(i, n + i) = 1.0;
      t(i, cols) = -rhs[i];
      basis[i] = n + i;
    }
  }
  // Objective row holds reduced costs of min sum(artificials), with the
  // negated objective value in the last column.
  for (int r : artificial_row) t.row(rows) -= t.row(r);
  for (int k = 0; k < n_art; ++k) t(rows, n + rows + k) = 0.0;

  Phase1Result out;
  const int max_pivots = 50 * (rows + cols) + 1000;
  while (out.pivots < max_pivots) {
    int enter = -1;
    for (int c = 0; c < cols; ++c) {
      if (t(rows, c) < -kCostTol) {
        enter = c;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i) {
      const double p = t(i, enter);
      if (p <= kPivotTol) continue;
      const double ratio = t(i, cols) / p;
      if (leave < 0 || ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot occur for phase 1
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= rows; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[leave] = enter;
    ++out.pivots;
  }

  Vector y = Vector::Zero(n);
  for (int i = 0; i < rows; ++i) {
    if (basis[i] < n) y[basis[i]] = t(i, cols);
  }
  out.x = lo + y;
  for (int j = 0; j < n; ++j) out.x[j] = std::clamp(out.x[j], lo[j], hi[j]);
  out.objective = std::max(0.0, -t(rows, cols));
  return out;
}

}  // namespace nntree
