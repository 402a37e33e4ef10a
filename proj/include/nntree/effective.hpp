#pragma once

#include <optional>
#include <vector>

#include "nntree/network.hpp"

namespace nntree {

/// Concatenated activation patterns, one per activated layer, in evaluation
/// order. Identifies a linear region of the network and a leaf of its tree.
using CategorizationVector = ActivationTrace;

/// Arithmetic actually executed along one evaluation path.
///
/// Applying an augmented row of length d0+1 to [x0; 1] costs d0 multiplies
/// and d0 additions (the bias entry seeds the accumulator). Region selection
/// costs one comparison per breakpoint tested.
struct PathCost {
  long comparisons = 0;
  long multiplies = 0;
  long additions = 0;

  long mult_adds() const noexcept { return multiplies + additions; }
  PathCost& operator+=(const PathCost& o) noexcept {
    comparisons += o.comparisons;
    multiplies += o.multiplies;
    additions += o.additions;
    return *this;
  }
  friend bool operator==(const PathCost&, const PathCost&) = default;
};

/// Dot product of an augmented row with [x; 1], tallying into `cost`.
double apply_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Vector& x,
                 PathCost* cost = nullptr);

/// One layer of a network in homogeneous coordinates.
///
/// Given the state s (augmented, last entry 1) the step selects regions for
/// rows [0, decision_units) with `activation`, builds the diagonal slope
/// matrix D(a) whose bias column carries the region intercepts, and moves to
///   s' = map * D(a) * s            (plain step)
///   s' = s + map * D(a) * s        (residual step)
/// Rows at or above decision_units pass through D(a) unchanged. Steps without
/// an activation are purely linear.
struct CompiledStep {
  std::optional<PwlActivation> activation;
  int decision_units = 0;
  bool residual = false;
  Matrix map;
  /// Index of the source layer (time step for recurrent networks).
  int layer_index = 0;

  bool branches() const noexcept { return activation && !activation->is_linear(); }
};

/// Any supported network lowered to an initial affine map followed by
/// piecewise steps. Convolutions are unrolled to dense operators at the
/// declared input size and recurrent cells are unrolled over their horizon.
struct CompiledNetwork {
  int input_dim = 0;
  int output_dim = 0;
  /// (m0+1) x (input_dim+1) augmented first map.
  Matrix initial;
  std::vector<CompiledStep> steps;

  /// Number of activated steps, i.e. patterns in a full categorization.
  int pattern_count() const;
  /// Tree depth: decision units summed over branching steps.
  int depth() const;
  /// Units per branching step, in order.
  std::vector<int> widths() const;
  /// Leaf count of the unpruned tree, saturating at `cap`.
  double leaf_count() const;
  /// Leaf count written as a power product such as "2^4" or "2^2*3^2".
  std::string leaf_count_expression() const;
};

CompiledNetwork compile_network(const NetworkSpec& net);

struct MaskedWeights {
  Matrix masked;
  Vector intercept_contribution;
};

/// Scales column j of `w` by the slope of region pattern[j] and returns
/// w * intercepts(pattern) for the caller to add to its bias column.
MaskedWeights mask_weights(const Matrix& w, const ActivationPattern& pattern,
                           const PwlActivation& act);

/// Effective matrix of the next stage: step.map * D(a) * current (plus
/// current for residual steps). The homogeneous last row is preserved
/// exactly.
Matrix apply_step(const CompiledStep& step, const Matrix& current,
                  const ActivationPattern& pattern);

struct EffectiveMatrix {
  /// (rows + 1) x (input_dim + 1), last row [0 ... 0 1].
  Matrix matrix;
  int stage = 0;
  CategorizationVector category;
};

/// Effective matrix reproducing the pre-activation at `stage` from [x0; 1].
/// Stage 0 is the first layer's pre-activation; stage s follows s steps.
/// For dense networks stage i is layer i. Throws DimensionError when
/// `category` holds fewer patterns than the stage consumes or a pattern has
/// the wrong length.
EffectiveMatrix effective_matrix(const CompiledNetwork& net, const CategorizationVector& category,
                                 int stage);
EffectiveMatrix effective_matrix(const NetworkSpec& net, const CategorizationVector& category,
                                 int stage);

struct LazyResult {
  Vector output;
  CategorizationVector category;
  PathCost cost;
};

/// Evaluates the network by deciding each unit on the effective row applied
/// directly to the input, extending the effective matrix one layer at a
/// time. Only branching units are tested; linear activations record region 0
/// without a test.
LazyResult lazy_eval(const CompiledNetwork& net, const Vector& x0);
LazyResult lazy_eval(const NetworkSpec& net, const Vector& x0);

/// Augmented I + (W masked by the pattern), with intercepts in the bias
/// column.
Matrix residual_step_matrix(const ResidualBlock& block, const ActivationPattern& pattern);

/// Effective matrix of a residual stack built directly as the product of
/// residual step matrices times the augmented first layer. `stage` counts
/// blocks applied. Output layers after the stack are not included.
EffectiveMatrix residual_effective(const NetworkSpec& net, const CategorizationVector& category,
                                   int stage);

}  // namespace nntree
