#include "nntree/training.hpp"

#include <cmath>
#include <stdexcept>

#include "nntree/errors.hpp"

namespace nntree {
namespace {

std::vector<DenseLayer> dense_layers(const NetworkSpec& net) {
  if (net.info().homogeneous) throw std::invalid_argument("train: homogeneous networks are not supported");
  std::vector<DenseLayer> out;
  for (const Layer& layer : net.layers()) {
    const auto* d = std::get_if<DenseLayer>(&layer);
    if (d == nullptr) throw std::invalid_argument("train: only dense networks can be trained");
    out.push_back(*d);
  }
  return out;
}

// Loss of one raw output and its gradient with respect to that output.
double sample_loss(const Vector& raw, const Vector& target, Loss loss, Vector* grad) {
  if (loss == Loss::mse) {
    const Vector diff = raw - target;
    if (grad != nullptr) *grad = 2.0 * diff / static_cast<double>(diff.size());
    return diff.squaredNorm() / static_cast<double>(diff.size());
  }
  const double z = raw[0];
  const double t = target[0];
  if (grad != nullptr) {
    *grad = Vector::Zero(raw.size());
    (*grad)[0] = sigmoid(z) - t;
  }
  // log(1 + exp(-|z|)) form stays finite for large |z|.
  return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

struct Workspace {
  std::vector<Vector> inputs;
  std::vector<Vector> slopes;
};

Vector run_forward(const std::vector<DenseLayer>& layers, const Vector& x, Workspace& ws) {
  ws.inputs.resize(layers.size());
  ws.slopes.resize(layers.size());
  Vector a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ws.inputs[l] = a;
    Vector z = layers[l].weights * a + layers[l].bias;
    ws.slopes[l] = Vector::Ones(z.size());
    if (layers[l].activation) {
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const RegionChoice c = layers[l].activation->select(z[j]);
        ws.slopes[l][j] = c.slope;
        z[j] = c.slope * z[j] + c.intercept;
      }
    }
    a = std::move(z);
  }
  return a;
}

}  // namespace

NetworkSpec init_dense_network(const std::vector<int>& sizes, const PwlActivation& activation,
                               std::uint64_t seed, NetworkInfo info) {
  if (sizes.size() < 2) throw std::invalid_argument("init_dense_network: need at least two sizes");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    DenseLayer d;
    d.weights.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) d.weights(r, c) = rng.uniform(-limit, limit);
    }
    d.bias = Vector::Zero(out);
    if (l + 2 < sizes.size()) d.activation = activation;
    layers.emplace_back(std::move(d));
  }
  info.seed = seed;
  return NetworkSpec(sizes.front(), std::move(layers), std::move(info));
}

double dataset_loss(const NetworkSpec& net, const Dataset& data, Loss loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += sample_loss(forward(net, data.inputs[i]).output, data.targets[i], loss, nullptr);
  }
  return data.size() == 0 ? 0.0 : total / static_cast<double>(data.size());
}

double accuracy(const NetworkSpec& net, const Dataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.targets[i][0] >= 0.5 ? 1 : 0;
    if (predicted_class(forward(net, data.inputs[i]).output) == label) ++hits;
  }
  return data.size() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(const NetworkSpec& net, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0)) {
    throw std::invalid_argument("train: epochs, batch size and learning rate must be positive");
  }
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (data.input_dim() != net.input_dim()) {
    throw std::invalid_argument("train: dataset has " + std::to_string(data.input_dim()) +
                                " inputs, network expects " + std::to_string(net.input_dim()));
  }
  std::vector<DenseLayer> layers = dense_layers(net);
  const std::size_t n_layers = layers.size();
  std::vector<Matrix> grad_w(n_layers), vel_w(n_layers);
  std::vector<Vector> grad_b(n_layers), vel_b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    vel_w[l] = Matrix::Zero(layers[l].weights.rows(), layers[l].weights.cols());
    vel_b[l] = Vector::Zero(layers[l].bias.size());
  }

  Rng rng(cfg.seed);
  Workspace ws;
  TrainResult result{net, {}};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(data.size());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < n_layers; ++l) {
        grad_w[l].setZero(layers[l].weights.rows(), layers[l].weights.cols());
        grad_b[l].setZero(layers[l].bias.size());
      }
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = order[s];
        const Vector out = run_forward(layers, data.inputs[i], ws);
        Vector delta;
        sample_loss(out, data.targets[i], cfg.loss, &delta);
        for (std::size_t l = n_layers; l-- > 0;) {
          delta = delta.cwiseProduct(ws.slopes[l]);
          grad_w[l].noalias() += scale * delta * ws.inputs[l].transpose();
          grad_b[l] += scale * delta;
          if (l > 0) delta = layers[l].weights.transpose() * delta;
        }
      }
      for (std::size_t l = 0; l < n_layers; ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * grad_w[l];
        vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * grad_b[l];
        layers[l].weights += vel_w[l];
        layers[l].bias += vel_b[l];
      }
    }
    std::vector<Layer> snapshot(layers.begin(), layers.end());
    result.net = NetworkSpec(net.input_dim(), std::move(snapshot), net.info());
    const double loss = dataset_loss(result.net, data, cfg.loss);
    if (!std::isfinite(loss)) {
      throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.curve.push_back(loss);
  }
  return result;
}

}  // namespace nntree
