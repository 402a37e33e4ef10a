#include "nntree/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nntree/errors.hpp"
#include "nntree/weights_io.hpp"

namespace nntree {
namespace {

using json = nlohmann::ordered_json;

// Flat copy of a dense network for the census loop.
struct FlatLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major
  std::vector<double> b;
  const PwlActivation* act = nullptr;
};

std::vector<FlatLayer> flatten(const NetworkSpec& net) {
  std::vector<FlatLayer> out;
  for (const Layer& layer : net.layers()) {
    const auto* d = std::get_if<DenseLayer>(&layer);
    if (d == nullptr) throw std::invalid_argument("region_census: dense networks only");
    FlatLayer f;
    f.in = d->inputs();
    f.out = d->outputs();
    for (int r = 0; r < f.out; ++r) {
      for (int c = 0; c < f.in; ++c) f.w.push_back(d->weights(r, c));
      f.b.push_back(d->bias[r]);
    }
    f.act = d->activation ? &*d->activation : nullptr;
    out.push_back(std::move(f));
  }
  return out;
}

int grid_count(double lo, double hi, double step) {
  return static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
}

double grid_value(double lo, double hi, double step, int i, int n) {
  return i == n - 1 ? hi : lo + step * i;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json cost_json(const ModelCost& c) {
  return {{"params", c.params}, {"comparisons", c.comparisons}, {"mult_adds", c.mult_adds}};
}

}  // namespace

RegionCensus region_census(const NetworkSpec& net, const DomainBox& domain, double step) {
  if (domain.dims() != net.input_dim()) {
    throw DimensionError("region_census: domain and network dimensions differ");
  }
  if (!(step > 0)) throw std::invalid_argument("region_census: step must be positive");
  const std::vector<FlatLayer> layers = flatten(net);

  // Patterns are packed into one integer in mixed radix when they fit.
  std::vector<std::uint64_t> radix;
  std::size_t units = 0;
  bool packed = true;
  double capacity = 1.0;
  for (const FlatLayer& l : layers) {
    if (l.act == nullptr) continue;
    for (int j = 0; j < l.out; ++j) radix.push_back(static_cast<std::uint64_t>(l.act->regions()));
    units += l.out;
    capacity *= std::pow(l.act->regions(), l.out);
  }
  if (capacity > 9.0e18) packed = false;

  const int dims = domain.dims();
  std::vector<int> n(dims);
  for (int k = 0; k < dims; ++k) n[k] = grid_count(domain.lo[k], domain.hi[k], step);

  int width = dims;
  for (const FlatLayer& l : layers) width = std::max(width, l.out);
  std::vector<double> a(width), z(width);
  std::vector<int> pattern(units);
  std::unordered_map<std::uint64_t, long> packed_counts;
  std::map<std::vector<int>, long> wide_counts;

  RegionCensus census;
  std::vector<int> idx(dims, 0);
  while (true) {
    for (int k = 0; k < dims; ++k) a[k] = grid_value(domain.lo[k], domain.hi[k], step, idx[k], n[k]);
    std::size_t u = 0;
    for (const FlatLayer& l : layers) {
      for (int r = 0; r < l.out; ++r) {
        double s = l.b[r];
        const double* row = &l.w[static_cast<std::size_t>(r) * l.in];
        for (int c = 0; c < l.in; ++c) s += row[c] * a[c];
        if (l.act != nullptr) {
          const RegionChoice choice = l.act->select(s);
          pattern[u++] = choice.region;
          s = choice.slope * s + choice.intercept;
        }
        z[r] = s;
      }
      std::copy(z.begin(), z.begin() + l.out, a.begin());
    }
    if (packed) {
      std::uint64_t key = 0;
      for (std::size_t j = 0; j < units; ++j) key = key * radix[j] + static_cast<std::uint64_t>(pattern[j]);
      ++packed_counts[key];
    } else {
      ++wide_counts[pattern];
    }
    ++census.points;

    int k = 0;
    while (k < dims && ++idx[k] == n[k]) idx[k++] = 0;
    if (k == dims) break;
  }

  if (packed) {
    for (const auto& [key, count] : packed_counts) {
      std::vector<int> p(units);
      std::uint64_t rest = key;
      for (std::size_t j = units; j-- > 0;) {
        p[j] = static_cast<int>(rest % radix[j]);
        rest /= radix[j];
      }
      census.counts[p] = count;
    }
  } else {
    census.counts = std::move(wide_counts);
  }
  return census;
}

Dataset ExperimentSetup::dataset() const {
  if (name == "parabola") return gen_parabola(5000, -2.5, 2.5);
  return gen_halfmoons(1000, 0.1, seed);
}

std::uint64_t default_seed(const std::string& name) {
  if (name == "parabola") return 7;
  if (name == "halfmoon") return 7;
  throw std::invalid_argument("unknown experiment '" + name + "' (expected parabola or halfmoon)");
}

ExperimentSetup experiment_setup(const std::string& name, std::uint64_t seed) {
  ExperimentSetup s;
  s.name = name;
  s.seed = seed;
  s.activation = PwlActivation::leaky_relu(0.3);
  s.train.seed = seed + 1;
  if (name == "parabola") {
    s.sizes = {1, 2, 2, 1};
    s.train.loss = Loss::mse;
    s.train.epochs = 400;
    s.train.batch_size = 32;
    s.train.learning_rate = 0.005;
    s.train.momentum = 0.9;
    s.domain = DomainBox::uniform(1, -2.5, 2.5);
    s.reference_nn = ModelCost{13, 4, 16};
    s.reference_tree = ModelCost{14, 2.6, 2};
  } else if (name == "halfmoon") {
    s.sizes = {2, 2, 2, 1};
    s.output_activation = OutputActivation::sigmoid;
    s.train.loss = Loss::bce;
    s.train.epochs = 300;
    s.train.batch_size = 32;
    s.train.learning_rate = 0.05;
    s.train.momentum = 0.9;
    s.domain = DomainBox{{-2.0, -1.5}, {3.0, 2.0}};
    s.reference_nn = ModelCost{15, 5, 25};
    s.reference_tree = ModelCost{39, 4.1, 8.2};
  } else {
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected parabola or halfmoon)");
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentSetup& setup) {
  const Dataset data = setup.dataset();
  for (const Vector& x : data.inputs) {
    if (!setup.domain.contains(x)) throw std::runtime_error("dataset leaves the declared domain");
  }
  NetworkInfo info;
  info.name = setup.name;
  info.output_activation = setup.output_activation;
  const NetworkSpec init = init_dense_network(setup.sizes, setup.activation, setup.seed, info);

  ExperimentResult r{setup, init, {}, 0.0, 0.0, {}, {}, {}, {}, {}, 0, 0, 0};
  TrainResult trained = train(init, data, setup.train);
  r.net = std::move(trained.net);
  r.curve = std::move(trained.curve);
  r.final_loss = r.curve.back();
  r.metric = setup.train.loss == Loss::mse ? dataset_loss(r.net, data, Loss::mse)
                                           : accuracy(r.net, data);

  r.tree = build_tree(r.net);
  PruneOptions options;
  options.domain = setup.domain;
  PruneResult pruned = prune_infeasible(r.tree, options);
  r.prune_report = std::move(pruned.report);
  DecisionTree cleaned = std::move(pruned.tree);
  if (cleaned.input_dim == 1) cleaned = simplify_rules_1d(cleaned).tree;
  RealizedResult realized = mark_realized(cleaned, data.inputs);
  r.pruned = std::move(realized.tree);
  for (const LeafNode& leaf : r.pruned.leaves) {
    if (leaf.realized_count == 0) ++r.unrealized_leaves;
  }

  r.census = region_census(r.net, setup.domain, 1e-3);
  r.cost = cost_report(r.net, r.pruned, data);
  r.cost.reference_nn = setup.reference_nn;
  r.cost.reference_tree = setup.reference_tree;

  if (setup.output_activation == OutputActivation::sigmoid) {
    const DomainBox& d = setup.domain;
    const int nx = grid_count(d.lo[0], d.hi[0], setup.plot_step);
    const int ny = grid_count(d.lo[1], d.hi[1], setup.plot_step);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Vector x(2);
        x << grid_value(d.lo[0], d.hi[0], setup.plot_step, i, nx),
            grid_value(d.lo[1], d.hi[1], setup.plot_step, j, ny);
        const int tree_class = predicted_class(tree_eval(r.pruned, x).output);
        if (tree_class != predicted_class(forward(r.net, x).output)) ++r.class_mismatches;
        ++r.plot_points;
      }
    }
  }
  return r;
}

ExperimentResult run_experiment(const std::string& name, const std::filesystem::path& out_dir,
                                std::uint64_t seed) {
  const ExperimentSetup setup = experiment_setup(name, seed);
  ExperimentResult r = run_experiment(setup);
  std::filesystem::create_directories(out_dir);

  save_network(r.net, out_dir / "weights.json");
  save_tree(r.tree, out_dir / "tree.json");
  save_tree(r.pruned, out_dir / "tree_pruned.json");
  write_text_file(out_dir / "tree.dot", export_dot(r.tree));
  write_text_file(out_dir / "tree_pruned.dot", export_dot(r.pruned));
  write_text_file(out_dir / "prune_report.csv", r.prune_report.to_csv());
  write_text_file(out_dir / "cost_report.csv", r.cost.to_csv());

  std::ostringstream table;
  std::string table_name;
  if (name == "parabola") {
    table_name = "curve.csv";
    table << "x,target,network,tree,leaf\n";
    const Dataset data = setup.dataset();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector& x = data.inputs[i];
      const TreeEvalResult t = tree_eval(r.pruned, x);
      table << fmt(x[0]) << ',' << fmt(data.targets[i][0]) << ','
            << fmt(forward(r.net, x).output[0]) << ',' << fmt(t.output[0]) << ',' << t.leaf
            << "\n";
    }
  } else {
    table_name = "regions.csv";
    table << "x1,x2,leaf,tree_class,network_class\n";
    const DomainBox& d = setup.domain;
    const int nx = grid_count(d.lo[0], d.hi[0], setup.plot_step);
    const int ny = grid_count(d.lo[1], d.hi[1], setup.plot_step);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Vector x(2);
        x << grid_value(d.lo[0], d.hi[0], setup.plot_step, i, nx),
            grid_value(d.lo[1], d.hi[1], setup.plot_step, j, ny);
        const TreeEvalResult t = tree_eval(r.pruned, x);
        table << fmt(x[0]) << ',' << fmt(x[1]) << ',' << t.leaf << ','
              << predicted_class(t.output) << ',' << predicted_class(forward(r.net, x).output)
              << "\n";
      }
    }
  }
  write_text_file(out_dir / table_name, table.str());

  std::ostringstream curve;
  curve << "epoch,loss\n";
  for (std::size_t e = 0; e < r.curve.size(); ++e) curve << e + 1 << ',' << fmt(r.curve[e]) << "\n";
  write_text_file(out_dir / "training_curve.csv", curve.str());

  json manifest;
  manifest["experiment"] = name;
  manifest["seed"] = setup.seed;
  manifest["train_seed"] = setup.train.seed;
  json dataset;
  if (name == "parabola") {
    dataset = {{"name", "parabola"}, {"n", 5000}, {"lo", -2.5}, {"hi", 2.5}};
  } else {
    dataset = {{"name", "halfmoon"}, {"n", 1000}, {"noise", 0.1}, {"radius", 1.0},
               {"seed", setup.seed}};
  }
  manifest["dataset"] = dataset;
  manifest["architecture"] = setup.sizes;
  manifest["activation"] = activation_to_json(setup.activation);
  manifest["output_activation"] =
      setup.output_activation == OutputActivation::sigmoid ? "sigmoid" : "none";
  manifest["training"] = {{"optimizer", "minibatch-gd-momentum"},
                          {"loss", setup.train.loss == Loss::mse ? "mse" : "bce"},
                          {"epochs", setup.train.epochs},
                          {"batch_size", setup.train.batch_size},
                          {"learning_rate", setup.train.learning_rate},
                          {"momentum", setup.train.momentum}};
  manifest["domain"] = {{"lo", setup.domain.lo}, {"hi", setup.domain.hi}};
  json metrics;
  metrics["final_loss"] = r.final_loss;
  metrics[name == "parabola" ? "training_mse" : "training_accuracy"] = r.metric;
  metrics["leaves_full"] = r.tree.leaves.size();
  metrics["leaves_pruned"] = r.pruned.leaves.size();
  metrics["census_regions"] = r.census.regions();
  metrics["census_step"] = 1e-3;
  metrics["unrealized_leaves"] = r.unrealized_leaves;
  metrics["degenerate_warnings"] = r.prune_report.degenerate_warnings;
  if (name == "halfmoon") {
    metrics["plot_points"] = r.plot_points;
    metrics["class_mismatches"] = r.class_mismatches;
  }
  manifest["metrics"] = metrics;
  manifest["cost"] = {{"convention", r.cost.convention},
                      {"nn", cost_json(r.cost.nn)},
                      {"tree", cost_json(r.cost.tree)},
                      {"reference_nn", cost_json(*r.cost.reference_nn)},
                      {"reference_tree", cost_json(*r.cost.reference_tree)}};
  manifest["files"] = {"weights.json",     "tree.json",       "tree_pruned.json",
                       "tree.dot",         "tree_pruned.dot", "prune_report.csv",
                       "cost_report.csv",  table_name,        "training_curve.csv",
                       "manifest.json"};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return r;
}

}  // namespace nntree
