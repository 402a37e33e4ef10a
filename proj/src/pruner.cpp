#include "nntree/pruner.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "nntree/errors.hpp"
#include "nntree/feasibility.hpp"

namespace nntree {
namespace {

double x_norm(const Vector& normal) {
  return normal.head(normal.size() - 1).norm();
}

double value_at(const Vector& normal, const Vector& x) {
  const Eigen::Index d = normal.size() - 1;
  return normal.head(d).dot(x) + normal[d];
}

void append_region_rules(const DecisionNode& node, int region, std::vector<HalfspaceRule>& out) {
  if (region > 0) out.push_back({node.filter, Sense::at_least, node.breakpoints[region - 1]});
  if (region < node.regions() - 1) out.push_back({node.filter, Sense::below, node.breakpoints[region]});
}

DomainBox resolve_domain(const std::optional<DomainBox>& domain, int dims, double bound) {
  if (!domain) return DomainBox::uniform(dims, -bound, bound);
  if (domain->dims() != dims || static_cast<int>(domain->hi.size()) != dims) {
    throw DimensionError("domain has " + std::to_string(domain->dims()) +
                         " coordinates, inputs have " + std::to_string(dims));
  }
  return *domain;
}

// Copies the reachable part of a tree in pre-order, dropping dead leaves and
// optionally replacing single-child nodes by that child.
class Compactor {
 public:
  Compactor(const DecisionTree& src, const std::vector<bool>& leaf_alive, bool collapse)
      : src_(src), leaf_alive_(leaf_alive), collapse_(collapse) {}

  DecisionTree run(std::vector<int>& leaf_map, std::size_t& collapsed) {
    out_ = src_;
    out_.nodes.clear();
    out_.leaves.clear();
    leaf_map_.assign(src_.leaves.size(), -1);
    out_.root = copy(src_.root);
    if (out_.root.is_none()) throw std::runtime_error("no leaf survives; the domain is empty");
    leaf_map = leaf_map_;
    collapsed = collapsed_;
    return std::move(out_);
  }

 private:
  bool alive(ChildRef at) const {
    if (at.is_leaf()) return leaf_alive_[at.index];
    if (!at.is_node()) return false;
    for (const ChildRef& c : src_.nodes[at.index].children) {
      if (alive(c)) return true;
    }
    return false;
  }

  ChildRef copy(ChildRef at) {
    if (!alive(at)) return ChildRef::none();
    if (at.is_leaf()) {
      out_.leaves.push_back(src_.leaves[at.index]);
      leaf_map_[at.index] = static_cast<int>(out_.leaves.size()) - 1;
      return ChildRef::leaf(leaf_map_[at.index]);
    }
    const DecisionNode& node = src_.nodes[at.index];
    int live = 0;
    ChildRef only;
    for (const ChildRef& c : node.children) {
      if (alive(c)) {
        ++live;
        only = c;
      }
    }
    if (collapse_ && live == 1) {
      ++collapsed_;
      return copy(only);
    }
    const int index = static_cast<int>(out_.nodes.size());
    out_.nodes.push_back(node);
    for (int r = 0; r < node.regions(); ++r) {
      const ChildRef child = copy(node.children[r]);
      out_.nodes[index].children[r] = child;
    }
    return ChildRef::node(index);
  }

  const DecisionTree& src_;
  const std::vector<bool>& leaf_alive_;
  bool collapse_;
  DecisionTree out_;
  std::vector<int> leaf_map_;
  std::size_t collapsed_ = 0;
};

std::string category_text(const CategorizationVector& c) {
  std::string out;
  for (const auto& p : c.patterns) {
    out += '[';
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i > 0) out += ' ';
      out += std::to_string(p[i]);
    }
    out += ']';
  }
  return out;
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  double hi = std::numeric_limits<double>::infinity();
  bool hi_closed = false;

  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }

  Interval intersect(const Interval& o) const {
    Interval r = *this;
    if (o.lo > r.lo || (o.lo == r.lo && !o.lo_closed)) {
      r.lo = o.lo;
      r.lo_closed = o.lo_closed;
    }
    if (o.hi < r.hi || (o.hi == r.hi && !o.hi_closed)) {
      r.hi = o.hi;
      r.hi_closed = o.hi_closed;
    }
    return r;
  }
};

Interval region_interval(const Rule1d& rule, int region) {
  const int last = static_cast<int>(rule.thresholds.size());
  Interval r;
  if (rule.increasing) {
    if (region > 0) {
      r.lo = rule.thresholds[region - 1];
      r.lo_closed = true;
    }
    if (region < last) r.hi = rule.thresholds[region];
  } else {
    if (region < last) r.lo = rule.thresholds[region];
    if (region > 0) {
      r.hi = rule.thresholds[region - 1];
      r.hi_closed = true;
    }
  }
  return r;
}

class Simplifier {
 public:
  explicit Simplifier(const DecisionTree& src) : src_(src) {}

  SimplifyResult run() {
    SimplifyResult result;
    out_ = src_;
    out_.nodes.clear();
    out_.leaves.clear();
    leaf_map_.assign(src_.leaves.size(), -1);
    Interval start;
    if (src_.domain) start = {src_.domain->lo[0], true, src_.domain->hi[0], true};
    out_.root = visit(src_.root, start);
    if (out_.root.is_none()) throw std::runtime_error("simplify_rules_1d: no reachable leaf");
    result.removed_nodes = removed_;
    result.leaf_map = leaf_map_;
    result.tree = std::move(out_);
    return result;
  }

 private:
  ChildRef visit(ChildRef at, const Interval& within) {
    if (at.is_none()) return at;
    if (at.is_leaf()) {
      out_.leaves.push_back(src_.leaves[at.index]);
      leaf_map_[at.index] = static_cast<int>(out_.leaves.size()) - 1;
      return ChildRef::leaf(leaf_map_[at.index]);
    }
    const DecisionNode& node = src_.nodes[at.index];
    const std::optional<Rule1d> rule = rule_1d_from(node.filter, node.breakpoints);
    if (!rule) {
      ++removed_;
      return visit(node.children[select_region(node.breakpoints, node.filter[1])], within);
    }
    std::vector<Interval> parts(node.regions());
    int reachable = 0;
    int only = -1;
    for (int r = 0; r < node.regions(); ++r) {
      parts[r] = within.intersect(region_interval(*rule, r));
      if (!parts[r].empty() && !node.children[r].is_none()) {
        ++reachable;
        only = r;
      }
    }
    if (reachable == 0) return ChildRef::none();
    if (reachable == 1) {
      ++removed_;
      return visit(node.children[only], parts[only]);
    }
    const int index = static_cast<int>(out_.nodes.size());
    out_.nodes.push_back(node);
    out_.nodes[index].rule_1d = rule;
    for (int r = 0; r < node.regions(); ++r) {
      const ChildRef child =
          parts[r].empty() ? ChildRef::none() : visit(node.children[r], parts[r]);
      out_.nodes[index].children[r] = child;
    }
    return ChildRef::node(index);
  }

  const DecisionTree& src_;
  DecisionTree out_;
  std::vector<int> leaf_map_;
  std::size_t removed_ = 0;
};

}  // namespace

double HalfspaceRule::slack(const Vector& x) const {
  const double norm = x_norm(normal);
  const double diff = value_at(normal, x) - rhs;
  const double scaled = norm > 0 ? diff / norm : diff;
  return sense == Sense::at_least ? scaled : -scaled;
}

bool HalfspaceRule::holds(const Vector& x) const {
  const double v = value_at(normal, x);
  return sense == Sense::at_least ? v >= rhs : v < rhs;
}

PathPolytope path_constraints(const DecisionTree& tree, int leaf) {
  PathPolytope p;
  p.domain = tree.domain;
  for (const auto& [node, region] : leaf_path(tree, leaf)) {
    append_region_rules(tree.nodes[node], region, p.rules);
  }
  return p;
}

FeasibilityVerdict is_feasible(const PathPolytope& polytope, const FeasibilityOptions& options) {
  FeasibilityVerdict verdict;
  int dims = polytope.domain ? polytope.domain->dims() : -1;
  for (const auto& r : polytope.rules) {
    const int d = static_cast<int>(r.normal.size()) - 1;
    if (dims >= 0 && d != dims) throw DimensionError("is_feasible: rule dimensions disagree");
    dims = d;
  }
  if (dims < 0) throw DimensionError("is_feasible: empty polytope without a domain");
  const DomainBox box = resolve_domain(polytope.domain, dims, options.default_bound);
  const Vector lo = Eigen::Map<const Vector>(box.lo.data(), dims);
  const Vector hi = Eigen::Map<const Vector>(box.hi.data(), dims);

  // z >= a together with z < c on the very same filter is empty when c <= a.
  // This is exact, so such pairs are pruned instead of being flagged
  // degenerate by the closure test below.
  for (const auto& lower : polytope.rules) {
    if (lower.sense != Sense::at_least) continue;
    for (const auto& upper : polytope.rules) {
      if (upper.sense == Sense::below && upper.normal == lower.normal && upper.rhs <= lower.rhs) {
        verdict.status = Feasibility::infeasible;
        return verdict;
      }
    }
  }

  // Normalized rows a . x >= beta (before margins).
  std::vector<Vector> rows;
  std::vector<double> beta;
  for (const auto& r : polytope.rules) {
    const double norm = x_norm(r.normal);
    if (norm == 0.0) {
      if (!r.holds(Vector::Zero(dims))) {
        verdict.status = Feasibility::infeasible;
        return verdict;
      }
      continue;
    }
    Vector a = r.normal.head(dims) / norm;
    double b = (r.rhs - r.normal[dims]) / norm;
    if (r.sense == Sense::below) {
      a = -a;
      b = -b;
    }
    rows.push_back(std::move(a));
    beta.push_back(b);
  }

  const int m = static_cast<int>(rows.size());
  Matrix a(m, dims);
  Vector b(m);
  for (int i = 0; i < m; ++i) {
    a.row(i) = rows[i].transpose();
    b[i] = beta[i];
  }
  auto min_slack = [&](const Vector& x) {
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) s = std::min(s, a.row(i).dot(x) - b[i]);
    return s;
  };

  const double eps = options.epsilon;
  const Phase1Result tight = phase1_feasibility(a, b.array() + eps, lo, hi);
  verdict.objective = tight.objective;
  if (m == 0 || min_slack(tight.x) >= eps / 2) {
    verdict.status = Feasibility::feasible;
    verdict.witness = tight.x;
    return verdict;
  }
  const Phase1Result closure = phase1_feasibility(a, b, lo, hi);
  verdict.objective = closure.objective;
  if (closure.objective <= 10 * eps) {
    verdict.status = Feasibility::feasible;
    verdict.degenerate = true;
    verdict.witness = closure.x;
    return verdict;
  }
  verdict.status = Feasibility::infeasible;
  return verdict;
}

PruneResult prune_infeasible(const DecisionTree& tree, const PruneOptions& options) {
  const DomainBox domain = resolve_domain(options.domain ? options.domain : tree.domain,
                                          tree.input_dim, options.feasibility.default_bound);
  PruneResult result;
  PruneReport& report = result.report;
  report.nodes_before = tree.nodes.size();
  report.leaves_before = tree.leaves.size();
  report.rows.resize(tree.leaves.size());
  for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
    report.rows[i].leaf = static_cast<int>(i);
    report.rows[i].category = tree.leaves[i].category;
  }

  DecisionTree annotated = tree;
  std::vector<bool> leaf_alive(tree.leaves.size(), false);
  PathPolytope prefix;
  prefix.domain = domain;

  auto mark_dead = [&](ChildRef at, auto&& self) -> void {
    if (at.is_leaf()) {
      annotated.leaves[at.index].feasibility = Feasibility::infeasible;
      report.rows[at.index].verdict = Feasibility::infeasible;
      report.rows[at.index].by_ancestor = true;
    } else if (at.is_node()) {
      for (const ChildRef& c : tree.nodes[at.index].children) self(c, self);
    }
  };

  auto apply_verdict = [&](ChildRef at, const FeasibilityVerdict& v) {
    if (!at.is_leaf()) return;
    LeafNode& leaf = annotated.leaves[at.index];
    leaf.feasibility = v.status;
    leaf.degenerate = v.degenerate;
    leaf.witness = v.witness;
    PruneReportRow& row = report.rows[at.index];
    row.verdict = v.status;
    row.degenerate = v.degenerate;
    row.witness = v.witness;
    leaf_alive[at.index] = v.status == Feasibility::feasible;
  };

  auto visit = [&](ChildRef at, auto&& self) -> void {
    if (!at.is_node()) return;
    const DecisionNode& node = tree.nodes[at.index];
    for (int r = 0; r < node.regions(); ++r) {
      const ChildRef child = node.children[r];
      if (child.is_none()) continue;
      const std::size_t mark = prefix.rules.size();
      append_region_rules(node, r, prefix.rules);
      const FeasibilityVerdict v = is_feasible(prefix, options.feasibility);
      ++report.feasibility_checks;
      if (v.degenerate) ++report.degenerate_warnings;
      if (v.status == Feasibility::feasible) {
        apply_verdict(child, v);
        self(child, self);
      } else if (child.is_leaf()) {
        apply_verdict(child, v);
      } else {
        mark_dead(child, mark_dead);
      }
      prefix.rules.resize(mark);
    }
  };

  if (tree.root.is_leaf()) {
    const FeasibilityVerdict v = is_feasible(prefix, options.feasibility);
    ++report.feasibility_checks;
    apply_verdict(tree.root, v);
  } else {
    visit(tree.root, visit);
  }

  Compactor compactor(annotated, leaf_alive, true);
  result.tree = compactor.run(result.leaf_map, report.implied_nodes);
  result.tree.pruned = true;
  result.tree.domain = domain;
  report.nodes_after = result.tree.nodes.size();
  report.leaves_after = result.tree.leaves.size();
  for (std::size_t i = 0; i < report.rows.size(); ++i) report.rows[i].new_leaf = result.leaf_map[i];
  return result;
}

std::string PruneReport::to_csv() const {
  std::ostringstream out;
  out << "# nodes_before=" << nodes_before << " nodes_after=" << nodes_after
      << " leaves_before=" << leaves_before << " leaves_after=" << leaves_after
      << " implied_nodes=" << implied_nodes << " degenerate_warnings=" << degenerate_warnings
      << " feasibility_checks=" << feasibility_checks << "\n";
  out << "leaf,new_leaf,verdict,degenerate,by_ancestor,witness,category\n";
  char buf[64];
  for (const PruneReportRow& r : rows) {
    std::string witness;
    if (r.witness) {
      for (Eigen::Index i = 0; i < r.witness->size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", (*r.witness)[i]);
        if (i > 0) witness += ' ';
        witness += buf;
      }
    }
    out << r.leaf << ',' << r.new_leaf << ',' << to_string(r.verdict) << ','
        << (r.degenerate ? 1 : 0) << ',' << (r.by_ancestor ? 1 : 0) << ',' << witness << ','
        << category_text(r.category) << "\n";
  }
  return out.str();
}

std::optional<Rule1d> rule_1d_from(const Vector& filter, const std::vector<double>& breakpoints) {
  if (filter.size() != 2) throw DimensionError("rule_1d_from: filter must have length 2");
  const double w = filter[0];
  const double b = filter[1];
  if (w == 0.0) return std::nullopt;
  Rule1d rule;
  rule.increasing = w > 0;
  for (double t : breakpoints) rule.thresholds.push_back((t - b) / w);
  return rule;
}

SimplifyResult simplify_rules_1d(const DecisionTree& tree) {
  if (tree.input_dim != 1) {
    throw DimensionError("simplify_rules_1d: tree has " + std::to_string(tree.input_dim) +
                         " inputs, expected 1");
  }
  return Simplifier(tree).run();
}

RealizedResult mark_realized(const DecisionTree& tree, const std::vector<Vector>& inputs,
                             bool drop_unrealized) {
  RealizedResult result;
  DecisionTree counted = tree;
  for (auto& leaf : counted.leaves) leaf.realized_count = 0;
  for (const Vector& x : inputs) {
    if (x.size() != tree.input_dim) {
      throw DimensionError("mark_realized: input has " + std::to_string(x.size()) +
                           " entries, tree expects " + std::to_string(tree.input_dim));
    }
    if (tree.domain && !tree.domain->contains(x)) {
      ++result.unrouted;
      continue;
    }
    try {
      ++counted.leaves[tree_eval(tree, x).leaf].realized_count;
    } catch (const PrunedRegionError&) {
      ++result.unrouted;
    }
  }
  if (!drop_unrealized) {
    result.leaf_map.resize(tree.leaves.size());
    for (std::size_t i = 0; i < tree.leaves.size(); ++i) result.leaf_map[i] = static_cast<int>(i);
    result.tree = std::move(counted);
    return result;
  }
  std::vector<bool> alive(tree.leaves.size());
  for (std::size_t i = 0; i < tree.leaves.size(); ++i) alive[i] = counted.leaves[i].realized_count > 0;
  std::size_t collapsed = 0;
  Compactor compactor(counted, alive, false);
  result.tree = compactor.run(result.leaf_map, collapsed);
  result.tree.lossy = true;
  return result;
}

}  // namespace nntree
