#include "nntree/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "nntree/cost.hpp"
#include "nntree/errors.hpp"
#include "nntree/experiments.hpp"
#include "nntree/generators.hpp"
#include "nntree/pruner.hpp"
#include "nntree/training.hpp"
#include "nntree/weights_io.hpp"

namespace nntree::cli {
namespace {

// Verification failure raised inside a subcommand.
struct VerifyFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string num(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

// "--domain lo,hi" once for all axes or once per axis.
std::optional<DomainBox> parse_domain(const std::vector<std::string>& specs, int dims) {
  if (specs.empty()) return std::nullopt;
  if (specs.size() != 1 && static_cast<int>(specs.size()) != dims) {
    throw UsageError("--domain must be given once or once per input axis");
  }
  DomainBox box;
  for (int k = 0; k < dims; ++k) {
    const auto v = parse_list(specs.size() == 1 ? specs[0] : specs[k]);
    if (v.size() != 2 || !(v[0] < v[1])) throw UsageError("--domain expects lo,hi with lo < hi");
    box.lo.push_back(v[0]);
    box.hi.push_back(v[1]);
  }
  return box;
}

bool inside(const DomainBox& inner, const DomainBox& outer) {
  for (int k = 0; k < inner.dims(); ++k) {
    if (inner.lo[k] < outer.lo[k] || inner.hi[k] > outer.hi[k]) return false;
  }
  return true;
}

double rel_dev(const Vector& a, const Vector& b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / (1.0 + std::abs(b[i])));
  }
  return worst;
}

std::string vec_text(const Vector& x) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i > 0) s += ", ";
    s += num(x[i], "%.17g");
  }
  return s + "]";
}

std::string category_text(const CategorizationVector& c) {
  std::string s;
  for (const auto& p : c.patterns) {
    s += '[';
    for (std::size_t i = 0; i < p.size(); ++i) s += (i > 0 ? " " : "") + std::to_string(p[i]);
    s += ']';
  }
  return s;
}

// Rule text for taking `region` at `node`.
std::string rule_text(const DecisionTree& tree, const DecisionNode& node, int region) {
  std::vector<std::string> parts;
  const int last = node.regions() - 1;
  std::optional<Rule1d> rule = node.rule_1d;
  if (!rule && tree.input_dim == 1) rule = rule_1d_from(node.filter, node.breakpoints);
  if (rule) {
    const auto& c = rule->thresholds;
    if (rule->increasing) {
      if (region > 0) parts.push_back("x >= " + num(c[region - 1]));
      if (region < last) parts.push_back("x < " + num(c[region]));
    } else {
      if (region > 0) parts.push_back("x <= " + num(c[region - 1]));
      if (region < last) parts.push_back("x > " + num(c[region]));
    }
  } else {
    const std::string f = affine_text(node.filter.transpose(), tree.input_dim);
    if (region > 0) parts.push_back(f + " >= " + num(node.breakpoints[region - 1]));
    if (region < last) parts.push_back(f + " < " + num(node.breakpoints[region]));
  }
  if (parts.empty()) return "true";
  std::string s = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) s += " and " + parts[i];
  return s;
}

DecisionTree compile_or_load(const std::string& weights, const std::string& tree_path) {
  if (!tree_path.empty()) return import_json(tree_path);
  return build_tree(load_network(weights));
}

int cmd_train(const std::string& task, const std::string& arch, std::uint64_t seed, int epochs,
              double lr, const std::string& output, std::ostream& out) {
  ExperimentSetup setup = experiment_setup(task, seed);
  if (!arch.empty()) {
    const Architecture a = parse_architecture(arch);
    setup.sizes = a.sizes;
    setup.activation = a.activation;
  }
  if (epochs > 0) setup.train.epochs = epochs;
  if (lr > 0) setup.train.learning_rate = lr;
  const Dataset data = setup.dataset();
  if (setup.sizes.front() != data.input_dim()) {
    throw UsageError("architecture input size " + std::to_string(setup.sizes.front()) +
                     " does not match the " + task + " data (" +
                     std::to_string(data.input_dim()) + ")");
  }
  NetworkInfo info;
  info.name = task;
  info.output_activation = setup.output_activation;
  const NetworkSpec init = init_dense_network(setup.sizes, setup.activation, seed, info);
  const TrainResult r = train(init, data, setup.train);
  save_network(r.net, output);
  out << "final loss " << num(r.curve.back()) << "\n";
  if (setup.train.loss == Loss::mse) {
    out << "training mse " << num(dataset_loss(r.net, data, Loss::mse)) << "\n";
  } else {
    out << "training accuracy " << num(accuracy(r.net, data)) << "\n";
  }
  out << "wrote " << output << "\n";
  return ok;
}

int cmd_compile(const std::string& weights, const std::string& output, double max_leaves,
                std::ostream& out) {
  const NetworkSpec net = load_network(weights);
  BuildLimits limits;
  limits.max_leaves = max_leaves;
  const DecisionTree tree = build_tree(net, limits);
  save_tree(tree, output);
  out << "d=" << tree.depth << " leaves=" << tree.leaves.size() << " k=" << tree.k
      << " nodes=" << tree.nodes.size() << "\n";
  return ok;
}

int cmd_verify(const std::string& weights, const std::string& tree_path, int samples,
               double tolerance, const std::vector<std::string>& domain_specs,
               std::uint64_t seed, std::ostream& out) {
  const NetworkSpec net = load_network(weights);
  const DecisionTree tree = import_json(tree_path);
  if (tree.input_dim != net.input_dim() || tree.output_dim != net.output_dim()) {
    throw SchemaError("tree", "dimensions do not match the weights file");
  }
  const int dims = tree.input_dim;
  std::optional<DomainBox> domain = parse_domain(domain_specs, dims);
  if (tree.domain) {
    if (domain && !inside(*domain, *tree.domain)) {
      throw UsageError("--domain exceeds the domain the pruned tree was built for");
    }
    if (!domain) domain = tree.domain;
  }
  if (!domain) domain = DomainBox::uniform(dims, -2.0, 2.0);

  std::vector<Vector> inputs;
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    Vector x(dims);
    for (int k = 0; k < dims; ++k) x[k] = rng.uniform(domain->lo[k], domain->hi[k]);
    inputs.push_back(std::move(x));
  }
  // Regular grid with about 1000 points.
  const int per_axis = std::max(2, static_cast<int>(std::pow(1000.0, 1.0 / dims)));
  std::vector<int> idx(dims, 0);
  while (dims <= 6) {
    Vector x(dims);
    for (int k = 0; k < dims; ++k) {
      x[k] = domain->lo[k] + (domain->hi[k] - domain->lo[k]) * idx[k] / (per_axis - 1);
    }
    inputs.push_back(std::move(x));
    int k = 0;
    while (k < dims && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == dims) break;
  }

  double worst = 0;
  std::optional<Vector> worst_input;
  std::size_t misrouted = 0;
  std::optional<Vector> misrouted_input;
  for (const Vector& x : inputs) {
    const ForwardResult ref = forward(net, x);
    TreeEvalResult got;
    try {
      got = tree_eval(tree, x);
    } catch (const PrunedRegionError&) {
      worst = std::numeric_limits<double>::infinity();
      worst_input = x;
      continue;
    }
    const double dev = rel_dev(got.output, ref.output);
    if (!worst_input || dev > worst) {
      worst = dev;
      worst_input = x;
    }
    if (tree.leaves[got.leaf].category != ref.trace) {
      ++misrouted;
      if (!misrouted_input) misrouted_input = x;
    }
  }
  out << "inputs " << inputs.size() << " max relative deviation " << num(worst, "%.3g")
      << " misrouted " << misrouted << "\n";
  if (worst > tolerance || misrouted > 0) {
    if (worst > tolerance && worst_input) out << "worst input " << vec_text(*worst_input) << "\n";
    if (misrouted_input) out << "first misrouted input " << vec_text(*misrouted_input) << "\n";
    throw VerifyFailed("verification failed");
  }
  out << "PASS\n";
  return ok;
}

int cmd_prune(const std::string& tree_path, const std::string& output,
              const std::vector<std::string>& domain_specs, bool simplify,
              const std::string& report_path, std::ostream& out) {
  const DecisionTree tree = import_json(tree_path);
  PruneOptions options;
  options.domain = parse_domain(domain_specs, tree.input_dim);
  PruneResult r = prune_infeasible(tree, options);
  DecisionTree result = std::move(r.tree);
  std::size_t simplified = 0;
  if (simplify && result.input_dim == 1) {
    SimplifyResult s = simplify_rules_1d(result);
    simplified = s.removed_nodes;
    result = std::move(s.tree);
  }
  save_tree(result, output);
  if (!report_path.empty()) write_text_file(report_path, r.report.to_csv());
  out << "leaves " << r.report.leaves_before << " -> " << result.leaves.size() << ", nodes "
      << r.report.nodes_before << " -> " << result.nodes.size() << ", implied "
      << r.report.implied_nodes + simplified << ", degenerate warnings "
      << r.report.degenerate_warnings << "\n";
  if (r.report.degenerate_warnings > 0) {
    out << "warning: " << r.report.degenerate_warnings
        << " region(s) are feasible only up to the numerical margin and were kept\n";
  }
  return ok;
}

int cmd_cost(const std::string& weights, const std::string& tree_path, const std::string& task,
             std::uint64_t seed, const std::string& output, std::ostream& out) {
  const NetworkSpec net = load_network(weights);
  const ExperimentSetup setup = experiment_setup(task, seed);
  DecisionTree tree;
  if (!tree_path.empty()) {
    tree = import_json(tree_path);
  } else {
    PruneOptions options;
    options.domain = setup.domain;
    tree = prune_infeasible(build_tree(net), options).tree;
    if (tree.input_dim == 1) tree = simplify_rules_1d(tree).tree;
  }
  CostReport report = cost_report(net, tree, setup.dataset());
  report.reference_nn = setup.reference_nn;
  report.reference_tree = setup.reference_tree;
  if (output.empty()) {
    out << report.to_csv();
  } else {
    write_text_file(output, report.to_csv());
    out << "wrote " << output << "\n";
  }
  return ok;
}

int cmd_export(const std::string& tree_path, const std::string& format, const std::string& output,
               std::size_t max_nodes, std::ostream& out) {
  const DecisionTree tree = import_json(tree_path);
  std::string text;
  if (format == "dot") {
    DotOptions options;
    options.max_nodes = max_nodes;
    text = export_dot(tree, options);
  } else if (format == "json") {
    text = export_json(tree);
  } else {
    std::ostringstream csv;
    csv << "leaf,depth,feasibility,realized_count,category,map\n";
    for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
      const LeafNode& leaf = tree.leaves[i];
      std::string map;
      for (int r = 0; r < tree.output_dim; ++r) {
        if (r > 0) map += "; ";
        map += affine_text(leaf.final_map.row(r), tree.input_dim);
      }
      csv << i << ',' << leaf_path(tree, static_cast<int>(i)).size() << ','
          << to_string(leaf.feasibility) << ',' << leaf.realized_count << ','
          << category_text(leaf.category) << ",\"" << map << "\"\n";
    }
    text = csv.str();
  }
  if (output.empty()) {
    out << text;
  } else {
    write_text_file(output, text);
  }
  return ok;
}

int cmd_eval(const std::string& weights, const std::string& tree_path, const std::string& input,
             bool explain, std::ostream& out) {
  if (weights.empty() && tree_path.empty()) throw UsageError("eval needs --tree or --weights");
  const DecisionTree tree = compile_or_load(weights, tree_path);
  const std::vector<double> values = parse_list(input);
  if (static_cast<int>(values.size()) != tree.input_dim) {
    throw UsageError("--input has " + std::to_string(values.size()) + " values, the tree expects " +
                     std::to_string(tree.input_dim));
  }
  const Vector x = Eigen::Map<const Vector>(values.data(), values.size());
  const TreeEvalResult r = tree_eval(tree, x);
  out << "output " << vec_text(r.output) << "\n";
  if (tree.output_activation == OutputActivation::sigmoid) {
    out << "class " << predicted_class(r.output) << "\n";
  }
  out << "leaf " << r.leaf << "\n";
  if (explain) {
    out << "rules:\n";
    for (const auto& [node, region] : leaf_path(tree, r.leaf)) {
      out << "  " << rule_text(tree, tree.nodes[node], region) << "\n";
    }
    const LeafNode& leaf = tree.leaves[r.leaf];
    for (int o = 0; o < tree.output_dim; ++o) {
      out << "y" << (tree.output_dim > 1 ? std::to_string(o + 1) : "") << " = "
          << affine_text(leaf.final_map.row(o), tree.input_dim) << "\n";
    }
    out << "category " << category_text(leaf.category) << "\n";
  }
  return ok;
}

int cmd_experiment(const std::string& name, std::optional<std::uint64_t> seed,
                   const std::string& output, std::ostream& out) {
  const std::uint64_t s = seed ? *seed : default_seed(name);
  const ExperimentResult r = run_experiment(name, output, s);
  out << name << " seed " << s << "\n";
  out << (name == "parabola" ? "training mse " : "training accuracy ") << num(r.metric) << "\n";
  out << "leaves " << r.tree.leaves.size() << " -> " << r.pruned.leaves.size()
      << ", grid census regions " << r.census.regions() << "\n";
  if (name == "halfmoon") {
    out << "class mismatches " << r.class_mismatches << " of " << r.plot_points << "\n";
  }
  out << "wrote " << output << "\n";
  return ok;
}

}  // namespace

Architecture parse_architecture(const std::string& text) {
  const auto colon = text.find(':');
  const std::string sizes_text = text.substr(0, colon);
  Architecture a;
  std::stringstream ss(sizes_text);
  std::string item;
  while (std::getline(ss, item, '-')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad layer size '" + item + "' in '" + text + "'");
    }
    const int n = std::stoi(item);
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
    a.sizes.push_back(n);
  }
  if (a.sizes.size() < 2) throw std::invalid_argument("architecture needs at least two sizes");
  if (colon == std::string::npos) return a;

  const std::string act = text.substr(colon + 1);
  auto suffix = [&](const std::string& prefix) -> std::optional<std::string> {
    if (act.rfind(prefix, 0) != 0) return std::nullopt;
    return act.substr(prefix.size());
  };
  if (act == "relu") {
    a.activation = PwlActivation::relu();
  } else if (act == "identity") {
    a.activation = PwlActivation::identity();
  } else if (act == "htanh") {
    a.activation = PwlActivation::hard_tanh();
  } else if (auto s = suffix("lrelu")) {
    const double slope = s->empty() ? 0.3 : parse_double(*s);
    a.activation = PwlActivation::leaky_relu(slope);
  } else if (auto q = suffix("qtanh")) {
    const int regions = q->empty() ? 4 : static_cast<int>(parse_double(*q));
    a.activation = quantized_tanh(regions);
  } else {
    throw std::invalid_argument("unknown activation '" + act + "'");
  }
  return a;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compile piecewise-linear networks into equivalent decision trees"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string task, arch, output, weights, tree_path, format = "dot", input, name, report_path;
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> experiment_seed;
  int epochs = 0, samples = 10000;
  double lr = 0, max_leaves = 1 << 20, tolerance = 1e-9;
  std::size_t max_nodes = 5000;
  std::vector<std::string> domain;
  bool explain = false, no_simplify = false;

  auto* train = app.add_subcommand("train", "Train a toy network and write its weights");
  train->add_option("--task", task, "parabola or halfmoon")->required();
  train->add_option("--arch", arch, "Architecture such as 1-2-2-1:lrelu0.3");
  train->add_option("--seed", seed, "Seed for initialization and batch order");
  train->add_option("--epochs", epochs, "Override the number of epochs");
  train->add_option("--lr", lr, "Override the learning rate");
  train->add_option("-o,--output", output, "Weights file to write")->required();

  auto* compile = app.add_subcommand("compile", "Build the equivalent decision tree");
  compile->add_option("weights", weights, "Weights file")->required();
  compile->add_option("-o,--output", output, "Tree file to write")->required();
  compile->add_option("--max-leaves", max_leaves, "Leaf budget (default 2^20)");

  auto* verify = app.add_subcommand("verify", "Check a tree against its network");
  verify->add_option("weights", weights, "Weights file")->required();
  verify->add_option("tree", tree_path, "Tree file")->required();
  verify->add_option("--samples", samples, "Random inputs in addition to a grid");
  verify->add_option("--tolerance", tolerance, "Largest accepted relative deviation");
  verify->add_option("--domain", domain, "lo,hi once or per input axis");
  verify->add_option("--seed", seed, "Seed for the random inputs");

  auto* prune = app.add_subcommand("prune", "Remove infeasible branches");
  prune->add_option("tree", tree_path, "Tree file")->required();
  prune->add_option("-o,--output", output, "Pruned tree file")->required();
  prune->add_option("--domain", domain, "lo,hi once or per input axis");
  prune->add_option("--report", report_path, "Write the prune report CSV here");
  prune->add_flag("--no-simplify", no_simplify, "Keep affine rules on scalar inputs");

  auto* cost = app.add_subcommand("cost", "Cost report of a network and its tree");
  cost->add_option("weights", weights, "Weights file")->required();
  cost->add_option("--tree", tree_path, "Tree to cost (default: pruned tree of the weights)");
  cost->add_option("--task", task, "Dataset: parabola or halfmoon")->required();
  cost->add_option("--seed", seed, "Dataset seed (halfmoon)");
  cost->add_option("-o,--output", output, "CSV file (default: stdout)");

  auto* exp = app.add_subcommand("export", "Export a tree as DOT, JSON or CSV");
  exp->add_option("tree", tree_path, "Tree file")->required();
  exp->add_option("--format", format, "dot, json or csv")
      ->check(CLI::IsMember({"dot", "json", "csv"}));
  exp->add_option("-o,--output", output, "Output file (default: stdout)");
  exp->add_option("--max-nodes", max_nodes, "Truncate DOT output after this many nodes");

  auto* eval = app.add_subcommand("eval", "Evaluate one input through a tree");
  eval->add_option("--tree", tree_path, "Tree file");
  eval->add_option("--weights", weights, "Weights file, compiled on the fly");
  eval->add_option("--input", input, "Comma-separated input")->required();
  eval->add_flag("--explain", explain, "Print the rule chain and the leaf's affine map");

  auto* experiment = app.add_subcommand("experiment", "Run a toy study and write its bundle");
  experiment->add_option("name", name, "parabola or halfmoon")
      ->required()
      ->check(CLI::IsMember({"parabola", "halfmoon"}));
  experiment->add_option("--seed", experiment_seed, "Seed (default: the recorded one)");
  experiment->add_option("-o,--output", output, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (*train) return cmd_train(task, arch, seed, epochs, lr, output, out);
    if (*compile) return cmd_compile(weights, output, max_leaves, out);
    if (*verify) return cmd_verify(weights, tree_path, samples, tolerance, domain, seed, out);
    if (*prune) return cmd_prune(tree_path, output, domain, !no_simplify, report_path, out);
    if (*cost) return cmd_cost(weights, tree_path, task, seed, output, out);
    if (*exp) return cmd_export(tree_path, format, output, max_nodes, out);
    if (*eval) return cmd_eval(weights, tree_path, input, explain, out);
    if (*experiment) return cmd_experiment(name, experiment_seed, output, out);
  } catch (const VerifyFailed& e) {
    err << "error: " << e.what() << "\n";
    return verification_failure;
  } catch (const LimitError& e) {
    err << "error: " << e.what() << " (required " << e.required() << ")\n";
    return resource_limit;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return training_failure;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return io_error;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return io_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n" << app.get_subcommands().front()->help();
    return usage;
  } catch (const PrunedRegionError& e) {
    err << "error: " << e.what() << "\n";
    return verification_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return io_error;
  }
  return usage;
}

}  // namespace nntree::cli
