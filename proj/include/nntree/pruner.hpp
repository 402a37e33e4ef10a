#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nntree/tree.hpp"

namespace nntree {

enum class Sense { at_least, below };

/// normal . [x; 1] >= rhs (closed) or normal . [x; 1] < rhs (open), matching
/// the left-closed region convention.
struct HalfspaceRule {
  Vector normal;
  Sense sense = Sense::at_least;
  double rhs = 0.0;

  /// Signed distance-like slack: positive inside, scaled by the norm of the
  /// non-homogeneous part of the normal (raw difference when that is zero).
  double slack(const Vector& x) const;
  /// Exact test of the rule itself.
  bool holds(const Vector& x) const;
};

struct PathPolytope {
  std::vector<HalfspaceRule> rules;
  std::optional<DomainBox> domain;
};

/// Region constraints of every ancestor of `leaf`. A region that is not the
/// lowest contributes a closed lower rule, one that is not the highest an
/// open upper rule. Uses the tree's domain when set.
PathPolytope path_constraints(const DecisionTree& tree, int leaf);

struct FeasibilityOptions {
  /// Margin turning open halfspaces into closed ones.
  double epsilon = 1e-7;
  /// Box half-width used when the polytope has no domain.
  double default_bound = 1e6;
};

struct FeasibilityVerdict {
  Feasibility status = Feasibility::unknown;
  /// Feasible only up to 10 * epsilon: kept, never pruned, but flagged.
  bool degenerate = false;
  /// For non-degenerate feasible verdicts every rule holds with slack at
  /// least epsilon / 2.
  std::optional<Vector> witness;
  /// Phase-1 objective of the last solve.
  double objective = 0.0;
};

/// Decides emptiness of a path polytope with the in-repo phase-1 simplex.
///
/// First every rule is tightened by epsilon (after normalizing normals to
/// unit length in x) and a witness is sought. If none is found, the closure
/// of the polytope is tested; an objective within 10 * epsilon of zero gives
/// a degenerate feasible verdict, anything larger proves emptiness. Rules
/// with a zero normal are evaluated directly.
FeasibilityVerdict is_feasible(const PathPolytope& polytope, const FeasibilityOptions& options = {});

struct PruneOptions {
  /// Region of interest; the tree is only guaranteed equivalent inside it.
  /// Defaults to the tree's domain, else +-default_bound per coordinate.
  std::optional<DomainBox> domain;
  FeasibilityOptions feasibility;
};

struct PruneReportRow {
  int leaf = 0;
  /// Index in the pruned tree, -1 when removed.
  int new_leaf = -1;
  Feasibility verdict = Feasibility::unknown;
  bool degenerate = false;
  /// Set when the verdict was inherited from an infeasible ancestor.
  bool by_ancestor = false;
  std::optional<Vector> witness;
  CategorizationVector category;
};

struct PruneReport {
  std::vector<PruneReportRow> rows;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  std::size_t leaves_before = 0;
  std::size_t leaves_after = 0;
  /// Nodes removed because only one child survived (rule implied).
  std::size_t implied_nodes = 0;
  std::size_t degenerate_warnings = 0;
  std::size_t feasibility_checks = 0;

  std::string to_csv() const;
};

struct PruneResult {
  DecisionTree tree;
  PruneReport report;
  /// Old leaf index to new leaf index, -1 when removed.
  std::vector<int> leaf_map;
};

/// Removes subtrees whose path polytope is empty inside the domain and
/// collapses nodes left with a single child. Evaluation inside the domain is
/// unchanged; the result records the domain and is marked pruned.
PruneResult prune_infeasible(const DecisionTree& tree, const PruneOptions& options = {});

/// Direct-inequality form of a scalar rule, nullopt for a zero weight.
std::optional<Rule1d> rule_1d_from(const Vector& filter, const std::vector<double>& breakpoints);

struct SimplifyResult {
  DecisionTree tree;
  std::vector<int> leaf_map;
  std::size_t removed_nodes = 0;
};

/// For scalar-input trees: rewrites every rule as thresholds on x, removes
/// nodes whose outcome is fixed by their ancestors (or by a zero weight) and
/// promotes the child that is always taken. Throws DimensionError when
/// input_dim != 1.
SimplifyResult simplify_rules_1d(const DecisionTree& tree);

struct RealizedResult {
  DecisionTree tree;
  std::vector<int> leaf_map;
  /// Inputs that reached a removed region or lie outside the tree's domain.
  std::size_t unrouted = 0;
};

/// Counts the inputs routed to each leaf. With `drop_unrealized`, leaves
/// that receive none are removed and the tree is marked lossy.
RealizedResult mark_realized(const DecisionTree& tree, const std::vector<Vector>& inputs,
                             bool drop_unrealized = false);

}  // namespace nntree
