#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nntree/datasets.hpp"
#include "nntree/network.hpp"

namespace nntree {

enum class Loss {
  mse,
  /// Binary cross-entropy on the sigmoid of the first output.
  bce,
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.01;
  /// Heavy-ball momentum; 0 gives plain gradient descent.
  double momentum = 0.0;
  std::uint64_t seed = 0;
  Loss loss = Loss::mse;
};

struct TrainResult {
  NetworkSpec net;
  /// Full-dataset loss after each epoch.
  std::vector<double> curve;
};

/// Fully connected network with `sizes` = {d0, m0, ..., d_out}, every hidden
/// layer using `activation`, weights drawn uniformly from
/// +-sqrt(6 / (fan_in + fan_out)) and zero biases.
NetworkSpec init_dense_network(const std::vector<int>& sizes, const PwlActivation& activation,
                               std::uint64_t seed, NetworkInfo info = {});

/// Mini-batch gradient descent on a dense network. Batches follow a fresh
/// seeded permutation each epoch. The derivative of an activation at a
/// breakpoint is the slope of the region select_region assigns to it.
/// Throws DivergenceError on a non-finite loss and std::invalid_argument
/// for unsupported layers or mismatched data.
TrainResult train(const NetworkSpec& net, const Dataset& data, const TrainConfig& cfg);

/// Mean loss of `net` on `data`.
double dataset_loss(const NetworkSpec& net, const Dataset& data, Loss loss);

/// Fraction of points whose predicted class (raw output >= 0) equals the
/// label.
double accuracy(const NetworkSpec& net, const Dataset& data);

}  // namespace nntree
