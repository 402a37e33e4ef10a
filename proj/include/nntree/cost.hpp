#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nntree/datasets.hpp"
#include "nntree/tree.hpp"

namespace nntree {

/// Identifier of the counting rules below, stamped into every report.
inline constexpr const char* kCostConvention = "nntree-cost-v1";

/// Counting rules (kCostConvention):
///   - a dense layer with n inputs and m outputs costs n*m multiplies and
///     n*m additions (n-1 accumulations plus the bias per output);
///   - every activated unit costs one multiply (the slope) and as many
///     comparisons as the region scan executes;
///   - a tree node applies its augmented row (d0 multiplies, d0 additions)
///     unless it carries a direct 1-D rule, which is compared with x as is;
///   - a leaf applies each output row of its map the same way;
///   - a sigmoid-output model spends one more comparison on its class
///     threshold, for the network and the tree alike.
struct ModelCost {
  long params = 0;
  double comparisons = 0.0;
  double mult_adds = 0.0;
};

struct CostReport {
  std::string model;
  std::string dataset;
  std::size_t samples = 0;
  std::string convention = kCostConvention;
  ModelCost nn;
  ModelCost tree;
  /// Published reference values, reported beside ours and never asserted.
  std::optional<ModelCost> reference_nn;
  std::optional<ModelCost> reference_tree;

  std::string to_csv() const;
};

/// Stored reals of a tree: filter rows (or 1-D thresholds) of every node and
/// the non-homogeneous rows of every leaf map.
long tree_parameter_count(const DecisionTree& tree);

/// Costs of `net` and of `tree` (compiled from it), averaged over the inputs
/// of `data`. Throws DimensionError when the data does not match.
CostReport cost_report(const NetworkSpec& net, const DecisionTree& tree, const Dataset& data);

}  // namespace nntree
