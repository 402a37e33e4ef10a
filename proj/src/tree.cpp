#include "nntree/tree.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "nntree/errors.hpp"

namespace nntree {

const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::feasible:
      return "feasible";
    case Feasibility::infeasible:
      return "infeasible";
    case Feasibility::unknown:
      break;
  }
  return "unknown";
}

int select_region_1d(const Rule1d& rule, double x, int* comparisons) {
  if (rule.increasing) return select_region(rule.thresholds, x, comparisons);
  int region = 0;
  int tests = 0;
  for (double c : rule.thresholds) {
    ++tests;
    if (!(x <= c)) break;
    ++region;
  }
  if (comparisons != nullptr) *comparisons = tests;
  return region;
}

DomainBox DomainBox::uniform(int dims, double lo, double hi) {
  return {std::vector<double>(dims, lo), std::vector<double>(dims, hi)};
}

bool DomainBox::contains(const Vector& x) const {
  if (x.size() != dims()) return false;
  for (int i = 0; i < dims(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const CompiledNetwork& net, DecisionTree& tree) : net_(net), tree_(tree) {}

  ChildRef expand(std::size_t step, Matrix current) {
    while (step < net_.steps.size() && !net_.steps[step].branches()) {
      const CompiledStep& s = net_.steps[step];
      ActivationPattern pattern;
      if (s.activation) {
        pattern.assign(s.decision_units, 0);
        category_.patterns.push_back(pattern);
      }
      current = apply_step(s, current, pattern);
      ++step;
    }
    if (step == net_.steps.size()) {
      LeafNode leaf;
      leaf.final_map = std::move(current);
      leaf.category = category_;
      tree_.leaves.push_back(std::move(leaf));
      return ChildRef::leaf(static_cast<int>(tree_.leaves.size()) - 1);
    }
    ActivationPattern pattern(net_.steps[step].decision_units, 0);
    return decide(step, 0, current, pattern);
  }

 private:
  ChildRef decide(std::size_t step, int unit, const Matrix& current, ActivationPattern& pattern) {
    const CompiledStep& s = net_.steps[step];
    if (unit == s.decision_units) {
      // Linear-activation patterns pushed while expanding the next stage are
      // popped again before returning here.
      const std::size_t depth_before = category_.patterns.size();
      category_.patterns.push_back(pattern);
      ChildRef child = expand(step + 1, apply_step(s, current, pattern));
      category_.patterns.resize(depth_before);
      return child;
    }
    const int index = static_cast<int>(tree_.nodes.size());
    DecisionNode node;
    node.filter = current.row(unit).transpose();
    node.breakpoints = s.activation->breakpoints();
    node.children.assign(s.activation->regions(), ChildRef::none());
    node.layer = s.layer_index;
    node.unit = unit;
    node.step = static_cast<int>(step);
    tree_.nodes.push_back(std::move(node));
    for (int r = 0; r < s.activation->regions(); ++r) {
      pattern[unit] = r;
      const ChildRef child = decide(step, unit + 1, current, pattern);
      tree_.nodes[index].children[r] = child;
    }
    pattern[unit] = 0;
    return ChildRef::node(index);
  }

  const CompiledNetwork& net_;
  DecisionTree& tree_;
  CategorizationVector category_;
};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string variable_name(int j, int input_dim) {
  return input_dim == 1 ? std::string("x") : "x" + std::to_string(j + 1);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string interval_text(const std::vector<double>& t, int r) {
  const std::string lo = r == 0 ? "-inf" : format_number(t[r - 1]);
  const std::string hi = r == static_cast<int>(t.size()) ? "+inf" : format_number(t[r]);
  return "[" + lo + ", " + hi + ")";
}

}  // namespace

DecisionTree build_tree(const CompiledNetwork& net, OutputActivation output_activation,
                        const BuildLimits& limits) {
  const double leaves = net.leaf_count();
  const int depth = net.depth();
  if (leaves > limits.max_leaves || depth > limits.max_depth) {
    std::ostringstream msg;
    msg << "tree requires " << net.leaf_count_expression() << " leaves (depth " << depth
        << "), exceeding the limit of " << limits.max_leaves << " leaves / depth "
        << limits.max_depth;
    throw LimitError(msg.str(), net.leaf_count_expression());
  }

  DecisionTree tree;
  tree.input_dim = net.input_dim;
  tree.output_dim = net.output_dim;
  tree.output_activation = output_activation;
  tree.depth = depth;
  tree.widths = net.widths();
  int k = -1;
  for (const auto& s : net.steps) {
    if (!s.branches()) continue;
    const int r = s.activation->regions();
    k = (k == -1 || k == r) ? r : 0;
  }
  tree.k = k == -1 ? 1 : k;
  tree.nodes.reserve(static_cast<std::size_t>(leaves));
  tree.leaves.reserve(static_cast<std::size_t>(leaves));

  TreeBuilder builder(net, tree);
  tree.root = builder.expand(0, net.initial);
  return tree;
}

DecisionTree build_tree(const NetworkSpec& net, const BuildLimits& limits) {
  return build_tree(compile_network(net), net.info().output_activation, limits);
}

TreeEvalResult tree_eval(const DecisionTree& tree, const Vector& x0) {
  if (x0.size() != tree.input_dim) {
    throw DimensionError("tree_eval: input has " + std::to_string(x0.size()) +
                         " entries, tree expects " + std::to_string(tree.input_dim));
  }
  TreeEvalResult out;
  ChildRef at = tree.root;
  while (at.is_node()) {
    const DecisionNode& node = tree.nodes[at.index];
    int tests = 0;
    int region = 0;
    if (node.rule_1d) {
      region = select_region_1d(*node.rule_1d, x0[0], &tests);
    } else {
      const double z = apply_row(node.filter.transpose(), x0, &out.cost);
      region = select_region(node.breakpoints, z, &tests);
    }
    out.cost.comparisons += tests;
    at = node.children[region];
  }
  if (at.is_none()) {
    throw PrunedRegionError("tree_eval: input reached a region removed by pruning");
  }
  const LeafNode& leaf = tree.leaves[at.index];
  out.leaf = at.index;
  out.output.resize(tree.output_dim);
  for (int r = 0; r < tree.output_dim; ++r) {
    out.output[r] = apply_row(leaf.final_map.row(r), x0, &out.cost);
  }
  return out;
}

std::vector<std::pair<int, int>> leaf_path(const DecisionTree& tree, int leaf) {
  if (leaf < 0 || leaf >= static_cast<int>(tree.leaves.size())) {
    throw std::out_of_range("leaf_path: leaf index out of range");
  }
  std::vector<std::pair<int, int>> path;
  std::function<bool(ChildRef)> search = [&](ChildRef at) {
    if (at.is_leaf()) return at.index == leaf;
    if (!at.is_node()) return false;
    const DecisionNode& node = tree.nodes[at.index];
    for (int r = 0; r < node.regions(); ++r) {
      path.emplace_back(at.index, r);
      if (search(node.children[r])) return true;
      path.pop_back();
    }
    return false;
  };
  if (!search(tree.root)) throw std::out_of_range("leaf_path: leaf not reachable from root");
  return path;
}

std::string affine_text(const Eigen::Ref<const Eigen::RowVectorXd>& row, int input_dim) {
  std::string out;
  for (int j = 0; j < input_dim; ++j) {
    const double c = row[j];
    if (out.empty()) {
      out = format_number(c) + "*" + variable_name(j, input_dim);
    } else {
      out += (c < 0 ? " - " : " + ") + format_number(std::abs(c)) + "*" +
             variable_name(j, input_dim);
    }
  }
  const double b = row[input_dim];
  if (out.empty()) return format_number(b);
  out += (b < 0 ? " - " : " + ") + format_number(std::abs(b));
  return out;
}

std::string export_dot(const DecisionTree& tree, const DotOptions& options) {
  std::ostringstream out;
  out << "digraph tree {\n";
  out << "  node [fontname=\"Helvetica\"];\n";
  const std::size_t total = tree.nodes.size() + tree.leaves.size();
  std::size_t emitted = 0;

  auto name_of = [](ChildRef ref) {
    return (ref.is_node() ? "n" : "l") + std::to_string(ref.index);
  };

  std::function<bool(ChildRef)> emit = [&](ChildRef ref) -> bool {
    if (ref.is_none() || emitted >= options.max_nodes) return false;
    ++emitted;
    if (ref.is_leaf()) {
      const LeafNode& leaf = tree.leaves[ref.index];
      std::string label;
      for (int r = 0; r < tree.output_dim; ++r) {
        if (r > 0) label += "\\n";
        label += dot_escape(affine_text(leaf.final_map.row(r), tree.input_dim));
      }
      if (options.class_labels && tree.output_activation == OutputActivation::sigmoid &&
          tree.output_dim == 1) {
        label += "\\nclass = [" + dot_escape(affine_text(leaf.final_map.row(0), tree.input_dim)) +
                 " >= 0]";
      }
      out << "  " << name_of(ref) << " [shape=box, color=red, label=\"" << label << "\"];\n";
      return true;
    }
    const DecisionNode& node = tree.nodes[ref.index];
    const bool binary = node.regions() == 2;
    std::string label;
    const bool as_1d = options.show_rules_1d && node.rule_1d && tree.input_dim == 1;
    if (as_1d && binary) {
      label = (node.rule_1d->increasing ? "x >= " : "x <= ") +
              format_number(node.rule_1d->thresholds[0]);
    } else {
      label = affine_text(node.filter.transpose(), tree.input_dim);
      if (binary) label += " >= " + format_number(node.breakpoints[0]);
    }
    out << "  " << name_of(ref) << " [shape=box, label=\"" << dot_escape(label) << "\"];\n";
    for (int r = 0; r < node.regions(); ++r) {
      const ChildRef child = node.children[r];
      if (!emit(child)) continue;
      std::string edge;
      if (binary) {
        edge = r == 1 ? "yes" : "no";
      } else if (as_1d) {
        const auto& t = node.rule_1d->thresholds;
        edge = node.rule_1d->increasing ? "x in " + interval_text(t, r)
                                        : "region " + std::to_string(r);
      } else {
        edge = interval_text(node.breakpoints, r);
      }
      out << "  " << name_of(ref) << " -> " << name_of(child) << " [label=\"" << dot_escape(edge)
          << "\"];\n";
    }
    return true;
  };
  emit(tree.root);
  if (emitted < total) {
    out << "  // truncated: showing " << emitted << " of " << total << " nodes\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace nntree
