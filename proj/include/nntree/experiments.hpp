#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nntree/cost.hpp"
#include "nntree/datasets.hpp"
#include "nntree/pruner.hpp"
#include "nntree/training.hpp"

namespace nntree {

/// Distinct activation patterns met on a regular grid.
struct RegionCensus {
  std::map<std::vector<int>, long> counts;
  std::size_t points = 0;

  std::size_t regions() const noexcept { return counts.size(); }
};

/// Evaluates a dense network on every point of the grid lo + i * step over
/// the box (each axis includes its upper end) and records which flattened
/// activation patterns occur. Uses its own forward loop, independent of the
/// tree code.
RegionCensus region_census(const NetworkSpec& net, const DomainBox& domain, double step = 1e-3);

/// Everything needed to reproduce one of the toy studies.
struct ExperimentSetup {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<int> sizes;
  PwlActivation activation = PwlActivation::leaky_relu(0.3);
  OutputActivation output_activation = OutputActivation::none;
  TrainConfig train;
  DomainBox domain;
  /// Spacing of the regions.csv plot grid (halfmoon).
  double plot_step = 0.02;
  std::optional<ModelCost> reference_nn;
  std::optional<ModelCost> reference_tree;

  Dataset dataset() const;
};

/// "parabola" or "halfmoon"; throws std::invalid_argument otherwise.
/// `seed` drives the initial weights, batch order and (halfmoon) data.
ExperimentSetup experiment_setup(const std::string& name, std::uint64_t seed);
std::uint64_t default_seed(const std::string& name);

struct ExperimentResult {
  ExperimentSetup setup;
  NetworkSpec net;
  std::vector<double> curve;
  /// Training loss (MSE or BCE) after the last epoch.
  double final_loss = 0.0;
  /// Training MSE for parabola, training accuracy for halfmoon.
  double metric = 0.0;
  DecisionTree tree;
  DecisionTree pruned;
  PruneReport prune_report;
  CostReport cost;
  RegionCensus census;
  /// Plot-grid points whose tree class differs from the network class.
  std::size_t class_mismatches = 0;
  std::size_t plot_points = 0;
  /// Feasible leaves no training point reaches.
  std::size_t unrealized_leaves = 0;
};

/// Trains, compiles, prunes and costs one toy study.
ExperimentResult run_experiment(const ExperimentSetup& setup);

/// Runs the study and writes its bundle to `out_dir`: weights.json,
/// tree.json, tree_pruned.json, tree.dot, tree_pruned.dot,
/// prune_report.csv, cost_report.csv, curve.csv (parabola: x, network,
/// tree) or regions.csv (halfmoon: plot grid with leaf and class), and
/// manifest.json.
ExperimentResult run_experiment(const std::string& name, const std::filesystem::path& out_dir,
                                std::uint64_t seed);

}  // namespace nntree
