#include "nntree/cost.hpp"

#include <cstdio>
#include <sstream>

#include "nntree/errors.hpp"

namespace nntree {
namespace {

struct NnWork {
  long comparisons = 0;
  long mult_adds = 0;
};

// Counts the arithmetic of a plain forward pass on one input.
NnWork count_forward(const NetworkSpec& net, const Vector& x) {
  NnWork w;
  const ForwardResult fr = forward(net, x);
  std::size_t next_pattern = 0;
  for (const Layer& layer : net.layers()) {
    const auto* d = std::get_if<DenseLayer>(&layer);
    if (d == nullptr) throw std::invalid_argument("cost_report: only dense networks are supported");
    w.mult_adds += 2L * d->inputs() * d->outputs();
    if (!d->activation) continue;
    const ActivationPattern& p = fr.trace.patterns.at(next_pattern++);
    const auto& t = d->activation->breakpoints();
    for (int region : p) {
      w.mult_adds += 1;
      // The scan tests every breakpoint up to and including the first one
      // above z, stopping early only before the last region.
      w.comparisons += std::min<long>(region + 1, static_cast<long>(t.size()));
    }
  }
  return w;
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

long tree_parameter_count(const DecisionTree& tree) {
  long n = 0;
  for (const DecisionNode& node : tree.nodes) {
    n += node.rule_1d ? static_cast<long>(node.rule_1d->thresholds.size())
                      : static_cast<long>(node.filter.size());
  }
  for (const LeafNode& leaf : tree.leaves) n += (leaf.final_map.rows() - 1) * leaf.final_map.cols();
  return n;
}

CostReport cost_report(const NetworkSpec& net, const DecisionTree& tree, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("cost_report: empty dataset");
  if (data.input_dim() != net.input_dim() || tree.input_dim != net.input_dim()) {
    throw DimensionError("cost_report: dataset, network and tree dimensions differ");
  }
  CostReport report;
  report.model = net.name();
  report.dataset = data.name;
  report.samples = data.size();
  report.nn.params = parameter_count(net);
  report.tree.params = tree_parameter_count(tree);
  const long threshold = net.info().output_activation == OutputActivation::sigmoid ? 1 : 0;

  long nn_cmp = 0, nn_ops = 0, tree_cmp = 0, tree_ops = 0;
  for (const Vector& x : data.inputs) {
    const NnWork w = count_forward(net, x);
    nn_cmp += w.comparisons + threshold;
    nn_ops += w.mult_adds;
    const TreeEvalResult r = tree_eval(tree, x);
    tree_cmp += r.cost.comparisons + threshold;
    tree_ops += r.cost.mult_adds();
  }
  const double n = static_cast<double>(data.size());
  report.nn.comparisons = nn_cmp / n;
  report.nn.mult_adds = nn_ops / n;
  report.tree.comparisons = tree_cmp / n;
  report.tree.mult_adds = tree_ops / n;
  return report;
}

std::string CostReport::to_csv() const {
  std::ostringstream out;
  out << "# model=" << model << " dataset=" << dataset << " samples=" << samples
      << " convention=" << convention << "\n";
  out << "representation,params,comparisons,mult_adds,reference_params,reference_comparisons,"
         "reference_mult_adds\n";
  auto row = [&](const char* name, const ModelCost& c, const std::optional<ModelCost>& ref) {
    out << name << ',' << c.params << ',' << number(c.comparisons) << ',' << number(c.mult_adds);
    if (ref) {
      out << ',' << ref->params << ',' << number(ref->comparisons) << ',' << number(ref->mult_adds);
    } else {
      out << ",,,";
    }
    out << "\n";
  };
  row("nn", nn, reference_nn);
  row("tree", tree, reference_tree);
  return out.str();
}

}  // namespace nntree
