#include <doctest.h>

#include "cost_oracle.hpp"
#include "helpers.hpp"
#include "nntree/experiments.hpp"
#include "nntree/errors.hpp"
#include "nntree/generators.hpp"
#include "nntree/training.hpp"
#include "nntree/weights_io.hpp"

using namespace nntree;
using namespace testing_util;

namespace {

bool dump_weights_equal(const NetworkSpec& a, const NetworkSpec& b) {
  return dump_network(a) == dump_network(b);
}

}  // namespace

TEST_CASE("parabola grid") {
  const Dataset d = gen_parabola(3);
  REQUIRE(d.size() == 3);
  CHECK(d.inputs[0][0] == -2.5);
  CHECK(d.inputs[1][0] == 0.0);
  CHECK(d.inputs[2][0] == 2.5);
  CHECK(d.targets[0][0] == 6.25);
  CHECK(d.targets[1][0] == 0.0);
  CHECK(d.targets[2][0] == 6.25);
  CHECK(gen_parabola().size() == 5000);
  CHECK_THROWS_AS(gen_parabola(1), std::invalid_argument);
}

TEST_CASE("noiseless half moons lie on their circles") {
  const Dataset d = gen_halfmoons(200, 0.0, 3);
  REQUIRE(d.size() == 200);
  int ones = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.inputs[i][0];
    const double y = d.inputs[i][1];
    if (d.targets[i][0] == 0.0) {
      CHECK(x * x + y * y == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y >= -1e-12);
    } else {
      ++ones;
      CHECK((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y <= 0.5 + 1e-12);
    }
  }
  CHECK(ones == 100);
  CHECK_THROWS(gen_halfmoons(7, 0.1, 0));
}

TEST_CASE("data and initial weights are seeded") {
  const Dataset a = gen_halfmoons(100, 0.1, 5);
  const Dataset b = gen_halfmoons(100, 0.1, 5);
  const Dataset c = gen_halfmoons(100, 0.1, 6);
  CHECK(a.inputs == b.inputs);
  CHECK(a.inputs != c.inputs);
  const auto act = PwlActivation::leaky_relu(0.3);
  CHECK(dump_weights_equal(init_dense_network({2, 2, 2, 1}, act, 9),
                           init_dense_network({2, 2, 2, 1}, act, 9)));
  CHECK_FALSE(dump_weights_equal(init_dense_network({2, 2, 2, 1}, act, 9),
                                 init_dense_network({2, 2, 2, 1}, act, 10)));
}

TEST_CASE("a linear model learns a slope of 3") {
  Dataset d;
  d.name = "line";
  for (int i = 0; i <= 100; ++i) {
    const double x = -1 + 0.02 * i;
    d.inputs.push_back(vec({x}));
    d.targets.push_back(vec({3 * x + 0.5}));
  }
  const NetworkSpec init = init_dense_network({1, 1}, PwlActivation::relu(), 1);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.seed = 2;
  const TrainResult r = train(init, d, cfg);
  const auto& layer = std::get<DenseLayer>(r.net.layers()[0]);
  CHECK(layer.weights(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(layer.bias[0] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.curve.size() == 300);
  CHECK(r.curve.back() < r.curve.front());
  CHECK(dataset_loss(r.net, d, Loss::mse) == doctest::Approx(r.curve.back()));
}

TEST_CASE("diverging training is reported") {
  const Dataset d = gen_parabola(50);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 10.0;
  cfg.momentum = 0.9;
  CHECK_THROWS_AS(train(init_dense_network({1, 1}, PwlActivation::relu(), 1), d, cfg),
                  DivergenceError);
}

TEST_CASE("training is deterministic") {
  const Dataset d = gen_parabola(200);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.005;
  cfg.momentum = 0.9;
  cfg.seed = 4;
  const NetworkSpec init = init_dense_network({1, 2, 2, 1}, PwlActivation::leaky_relu(0.3), 3);
  const TrainResult a = train(init, d, cfg);
  const TrainResult b = train(init, d, cfg);
  CHECK(a.curve == b.curve);
  CHECK(dump_weights_equal(a.net, b.net));
}

TEST_CASE("region census on the hand-set network") {
  const NetworkSpec net = small_parabola_net();
  const DomainBox domain = DomainBox::uniform(1, -2.5, 2.5);
  const RegionCensus census = region_census(net, domain, 1e-3);
  CHECK(census.points == 5001);
  long total = 0;
  for (const auto& [pattern, count] : census.counts) {
    CHECK(pattern.size() == 4);
    total += count;
  }
  CHECK(total == 5001);
  PruneOptions options;
  options.domain = domain;
  const PruneResult pruned = prune_infeasible(build_tree(net), options);
  CHECK(census.regions() == pruned.tree.leaf_count());
  CHECK_THROWS_AS(region_census(net, DomainBox::uniform(2, -1, 1)), DimensionError);
}

TEST_CASE("network costs of the two toy architectures") {
  const auto act = PwlActivation::leaky_relu(0.3);
  const NetworkSpec parabola = init_dense_network({1, 2, 2, 1}, act, 1);
  const Dataset pd = gen_parabola(101);
  const CostReport pc = cost_report(parabola, build_tree(parabola), pd);
  CHECK(pc.nn.params == 13);
  CHECK(pc.nn.comparisons == 4.0);
  CHECK(pc.nn.mult_adds == 20.0);
  CHECK(pc.convention == std::string(kCostConvention));

  NetworkInfo info;
  info.output_activation = OutputActivation::sigmoid;
  const NetworkSpec moon = init_dense_network({2, 2, 2, 1}, act, 1, info);
  const Dataset md = gen_halfmoons(100, 0.1, 1);
  const CostReport mc = cost_report(moon, build_tree(moon), md);
  CHECK(mc.nn.params == 15);
  CHECK(mc.nn.comparisons == 5.0);
  CHECK(mc.nn.mult_adds == 24.0);
  // The unpruned tree decides 4 units on 2-D filters and applies one output row.
  CHECK(mc.tree.comparisons == 5.0);
  CHECK(mc.tree.mult_adds == 20.0);
  CHECK(mc.tree.params == 15 * 3 + 16 * 3);
}

TEST_CASE("cost report equals the step-counting interpreter") {
  Rng rng(61);
  for (int n = 0; n < 30; ++n) {
    RandomDenseOptions options;
    options.input_dim = 1 + static_cast<int>(rng.index(2));
    options.max_leaves = 1024;
    const NetworkSpec net = random_dense_network(rng, options);
    Dataset data;
    data.name = "random";
    for (int i = 0; i < 200; ++i) data.inputs.push_back(random_point(rng, net.input_dim()));
    PruneOptions prune;
    prune.domain = DomainBox::uniform(net.input_dim(), -2, 2);
    DecisionTree tree = prune_infeasible(build_tree(net), prune).tree;
    if (tree.input_dim == 1) tree = simplify_rules_1d(tree).tree;
    const CostReport report = cost_report(net, tree, data);
    const cost_oracle::Averages nn = cost_oracle::network_average(net, data.inputs);
    const cost_oracle::Averages tr = cost_oracle::tree_average(tree, data.inputs);
    CHECK(report.nn.comparisons == nn.comparisons);
    CHECK(report.nn.mult_adds == nn.mult_adds);
    CHECK(report.tree.comparisons == tr.comparisons);
    CHECK(report.tree.mult_adds == tr.mult_adds);
    CHECK(report.tree.params == cost_oracle::tree_params(tree));
  }
}

TEST_CASE("cost CSV layout") {
  const NetworkSpec net = small_parabola_net();
  CostReport r = cost_report(net, build_tree(net), gen_parabola(11));
  r.reference_nn = ModelCost{13, 4, 16};
  const std::string csv = r.to_csv();
  CHECK(csv.find("convention=nntree-cost-v1") != std::string::npos);
  CHECK(csv.find("\nrepresentation,params,comparisons,mult_adds,reference_params,"
                 "reference_comparisons,reference_mult_adds\nnn,13,4,20,13,4,16\ntree,") !=
        std::string::npos);
}

TEST_CASE("experiment setups") {
  const ExperimentSetup p = experiment_setup("parabola", 7);
  CHECK(p.sizes == std::vector<int>{1, 2, 2, 1});
  CHECK(p.train.seed == 8);
  CHECK(p.dataset().size() == 5000);
  const ExperimentSetup h = experiment_setup("halfmoon", 7);
  CHECK(h.output_activation == OutputActivation::sigmoid);
  for (const Vector& x : h.dataset().inputs) CHECK(h.domain.contains(x));
  CHECK_THROWS_AS(experiment_setup("spiral", 1), std::invalid_argument);
  CHECK(default_seed("parabola") == 7);
}
