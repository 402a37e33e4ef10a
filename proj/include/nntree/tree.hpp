#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nntree/effective.hpp"
#include "nntree/network.hpp"

namespace nntree {

enum class Feasibility { unknown, feasible, infeasible };

const char* to_string(Feasibility f);

/// Reference to a child slot: an internal node, a leaf, or nothing (a region
/// removed by pruning).
struct ChildRef {
  enum class Kind : std::uint8_t { none, node, leaf };

  Kind kind = Kind::none;
  int index = -1;

  static ChildRef node(int i) { return {Kind::node, i}; }
  static ChildRef leaf(int i) { return {Kind::leaf, i}; }
  static ChildRef none() { return {}; }

  bool is_node() const noexcept { return kind == Kind::node; }
  bool is_leaf() const noexcept { return kind == Kind::leaf; }
  bool is_none() const noexcept { return kind == Kind::none; }
  friend bool operator==(const ChildRef&, const ChildRef&) = default;
};

/// Direct inequality form of a rule on a scalar input: filter w*x + b is
/// compared against breakpoint t_j by comparing x against
/// thresholds[j] = (t_j - b) / w. When w < 0 the comparison flips, so region
/// j then covers (thresholds[j], thresholds[j-1]].
struct Rule1d {
  std::vector<double> thresholds;
  bool increasing = true;
};

/// Region index of scalar x under a direct-inequality rule.
int select_region_1d(const Rule1d& rule, double x, int* comparisons = nullptr);

struct DecisionNode {
  /// Augmented effective row of length d0+1.
  Vector filter;
  std::vector<double> breakpoints;
  std::vector<ChildRef> children;
  int layer = 0;
  int unit = 0;
  /// Compiled step whose units this node decides.
  int step = 0;
  std::optional<Rule1d> rule_1d;

  int regions() const noexcept { return static_cast<int>(children.size()); }
};

struct LeafNode {
  /// (d_out+1) x (d0+1) final effective matrix, last row [0 ... 0 1].
  Matrix final_map;
  CategorizationVector category;
  Feasibility feasibility = Feasibility::unknown;
  bool degenerate = false;
  long realized_count = 0;
  std::optional<Vector> witness;
};

/// Per-coordinate bounds of the input domain.
struct DomainBox {
  std::vector<double> lo;
  std::vector<double> hi;

  static DomainBox uniform(int dims, double lo, double hi);
  int dims() const noexcept { return static_cast<int>(lo.size()); }
  bool contains(const Vector& x) const;
  friend bool operator==(const DomainBox&, const DomainBox&) = default;
};

/// Oblique decision tree equivalent to a piecewise-linear network. Nodes
/// and leaves are addressed by index; the root is node 0 unless the tree is
/// a single leaf.
struct DecisionTree {
  ChildRef root;
  std::vector<DecisionNode> nodes;
  std::vector<LeafNode> leaves;
  /// Regions per decision; 0 when activations with different region counts
  /// are mixed.
  int k = 0;
  int depth = 0;
  std::vector<int> widths;
  int input_dim = 0;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::none;
  /// Set once infeasible paths were removed; `domain` then bounds validity.
  bool pruned = false;
  /// Set when leaves were dropped for lack of data: no longer equivalent.
  bool lossy = false;
  std::optional<DomainBox> domain;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t leaf_count() const noexcept { return leaves.size(); }
};

struct BuildLimits {
  double max_leaves = 1 << 20;
  int max_depth = 64;
};

/// Materializes every root-to-leaf path. Units are decided in layer order and
/// ascending index within a layer; sibling subtrees are never merged. Throws
/// LimitError reporting the required leaf count when it exceeds the limits.
DecisionTree build_tree(const NetworkSpec& net, const BuildLimits& limits = {});
DecisionTree build_tree(const CompiledNetwork& net, OutputActivation output_activation,
                        const BuildLimits& limits = {});

struct TreeEvalResult {
  Vector output;
  int leaf = -1;
  PathCost cost;
};

/// Walks the tree. Throws DimensionError on input size mismatch and
/// PrunedRegionError when the input reaches a removed region.
TreeEvalResult tree_eval(const DecisionTree& tree, const Vector& x0);

/// Root-to-leaf chain of (node index, region taken) pairs.
std::vector<std::pair<int, int>> leaf_path(const DecisionTree& tree, int leaf);

struct DotOptions {
  /// Print scalar-input rules as x >= c when available.
  bool show_rules_1d = true;
  /// Nodes plus leaves beyond this count are omitted; the output then
  /// carries a "truncated" comment.
  std::size_t max_nodes = 5000;
  /// Append the thresholded class to leaf labels for sigmoid-output trees.
  bool class_labels = true;
};

std::string export_dot(const DecisionTree& tree, const DotOptions& options = {});

/// Augmented row as affine text, e.g. "0.55*x + 0.09" or "2*x1 - 1*x2 + 0.5".
std::string affine_text(const Eigen::Ref<const Eigen::RowVectorXd>& row, int input_dim);

nlohmann::ordered_json tree_to_json(const DecisionTree& tree);
/// Validates ids, child references, and shapes. Throws SchemaError naming
/// the offending node or leaf.
DecisionTree tree_from_json(const nlohmann::ordered_json& doc);

std::string export_json(const DecisionTree& tree);
DecisionTree parse_tree(const std::string& text);
void save_tree(const DecisionTree& tree, const std::filesystem::path& path);
DecisionTree import_json(const std::filesystem::path& path);

}  // namespace nntree
