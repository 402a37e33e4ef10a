#include "nntree/generators.hpp"

#include <cmath>

namespace nntree {
namespace {

int draw(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.index(hi - lo + 1)); }

Matrix random_matrix(Rng& rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

Vector random_vector(Rng& rng, int n, double scale) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

const PwlActivation& pick(Rng& rng, const std::vector<PwlActivation>& acts) {
  return acts[rng.index(acts.size())];
}

DenseLayer random_dense(Rng& rng, int in, int out, std::optional<PwlActivation> act,
                        double scale = 1.0) {
  return {random_matrix(rng, out, in, scale), random_vector(rng, out, scale), std::move(act)};
}

}  // namespace

std::vector<PwlActivation> standard_activations() {
  return {PwlActivation::relu(), PwlActivation::leaky_relu(0.3), PwlActivation::hard_tanh(),
          quantized_tanh(4)};
}

Vector random_point(Rng& rng, int dims, double lo, double hi) {
  Vector x(dims);
  for (int i = 0; i < dims; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

NetworkSpec random_dense_network(Rng& rng, const RandomDenseOptions& options) {
  const std::vector<PwlActivation> acts =
      options.activations.empty() ? standard_activations() : options.activations;
  while (true) {
    const int n_layers = draw(rng, options.min_layers, options.max_layers);
    std::vector<int> sizes{options.input_dim > 0 ? options.input_dim
                                                 : draw(rng, 1, options.max_width)};
    for (int l = 0; l + 1 < n_layers; ++l) sizes.push_back(draw(rng, 1, options.max_width));
    sizes.push_back(options.output_dim > 0 ? options.output_dim : draw(rng, 1, options.max_width));

    std::vector<PwlActivation> chosen;
    double leaves = 1.0;
    for (int l = 0; l + 1 < n_layers; ++l) {
      chosen.push_back(pick(rng, acts));
      leaves *= std::pow(chosen.back().regions(), sizes[l + 1]);
    }
    if (leaves > options.max_leaves) continue;

    std::vector<Layer> layers;
    for (int l = 0; l < n_layers; ++l) {
      std::optional<PwlActivation> act;
      if (l + 1 < n_layers) act = chosen[l];
      layers.emplace_back(random_dense(rng, sizes[l], sizes[l + 1], act, options.weight_scale));
    }
    NetworkInfo info;
    info.name = "random-dense";
    return NetworkSpec(sizes.front(), std::move(layers), info);
  }
}

NetworkSpec random_residual_network(Rng& rng) {
  const std::vector<PwlActivation> acts = standard_activations();
  const int width = draw(rng, 1, 4);
  const bool input_layer = rng.uniform() < 0.5;
  const int input_dim = input_layer ? draw(rng, 1, 3) : width;
  std::vector<Layer> layers;
  if (input_layer) layers.emplace_back(random_dense(rng, input_dim, width, std::nullopt));
  const int blocks = draw(rng, 1, 3);
  for (int b = 0; b < blocks; ++b) {
    layers.emplace_back(ResidualBlock{random_matrix(rng, width, width, 0.8), pick(rng, acts)});
  }
  if (rng.uniform() < 0.5) layers.emplace_back(random_dense(rng, width, draw(rng, 1, 3), std::nullopt));
  NetworkInfo info;
  info.name = "random-residual";
  return NetworkSpec(input_dim, std::move(layers), info);
}

NetworkSpec random_conv_network(Rng& rng) {
  const std::vector<PwlActivation> acts = standard_activations();
  while (true) {
    TensorShape shape{draw(rng, 1, 2), draw(rng, 3, 6), draw(rng, 3, 6)};
    const TensorShape input = shape;
    const int n_conv = draw(rng, 1, 2);
    std::vector<Layer> layers;
    bool valid = true;
    for (int l = 0; l < n_conv && valid; ++l) {
      ConvLayer c;
      c.out_channels = draw(rng, 1, 3);
      c.in_channels = shape.channels;
      c.kernel_h = draw(rng, 1, 3);
      c.kernel_w = draw(rng, 1, 3);
      c.stride = draw(rng, 1, 2);
      c.padding = draw(rng, 0, 1);
      c.kernel.resize(static_cast<std::size_t>(c.out_channels) * c.in_channels * c.kernel_h *
                      c.kernel_w);
      for (double& k : c.kernel) k = rng.uniform(-1.0, 1.0);
      c.bias = random_vector(rng, c.out_channels, 0.5);
      c.activation = pick(rng, acts);
      try {
        shape = c.output_shape(shape);
      } catch (const std::exception&) {
        valid = false;
      }
      layers.emplace_back(std::move(c));
    }
    if (!valid) continue;
    layers.emplace_back(random_dense(rng, shape.size(), draw(rng, 1, 2), std::nullopt, 0.5));
    NetworkInfo info;
    info.name = "random-conv";
    info.input_shape = input;
    return NetworkSpec(input.size(), std::move(layers), info);
  }
}

NetworkSpec random_rnn_network(Rng& rng, int horizon) {
  const int h = draw(rng, 1, 3);
  const int d_in = draw(rng, 1, 2);
  const int d_out = draw(rng, 1, 2);
  RnnCell cell{random_matrix(rng, h, h, 0.7), random_matrix(rng, h, d_in, 1.0),
               random_matrix(rng, d_out, h, 1.0), random_vector(rng, h, 0.5),
               pick(rng, standard_activations())};
  NetworkInfo info;
  info.name = "random-rnn";
  info.horizon = horizon;
  return NetworkSpec(d_in, {cell}, info);
}

}  // namespace nntree
