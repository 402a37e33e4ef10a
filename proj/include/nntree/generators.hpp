#pragma once

#include <vector>

#include "nntree/datasets.hpp"
#include "nntree/network.hpp"

namespace nntree {

/// ReLU, leaky-ReLU 0.3, hard-tanh and the 4-region quantized tanh.
std::vector<PwlActivation> standard_activations();

struct RandomDenseOptions {
  int min_layers = 1;
  int max_layers = 4;
  int max_width = 5;
  /// 0 draws the input size from 1..max_width.
  int input_dim = 0;
  int output_dim = 0;
  /// Activation drawn per hidden layer; empty means standard_activations().
  std::vector<PwlActivation> activations;
  /// Architectures whose eager tree would exceed this many leaves are
  /// redrawn.
  double max_leaves = 65536;
  double weight_scale = 1.0;
};

/// Dense network with weights and biases uniform in +-weight_scale.
NetworkSpec random_dense_network(Rng& rng, const RandomDenseOptions& options = {});

/// Optional unactivated input layer, 1-3 residual blocks of width <= 4 and an
/// optional unactivated output layer.
NetworkSpec random_residual_network(Rng& rng);

/// Inputs up to 2 x 6 x 6, one or two convolutions (kernel <= 3, stride <= 2,
/// padding <= 1, <= 3 channels), then an unactivated dense read-out.
NetworkSpec random_conv_network(Rng& rng);

/// Recurrent cell with hidden size <= 3 and per-step input/output <= 2.
NetworkSpec random_rnn_network(Rng& rng, int horizon = 6);

/// Uniform point in [lo, hi]^dims.
Vector random_point(Rng& rng, int dims, double lo = -2.0, double hi = 2.0);

}  // namespace nntree
