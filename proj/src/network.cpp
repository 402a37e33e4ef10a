#include "nntree/network.hpp"

#include <cmath>
#include <stdexcept>

#include "nntree/errors.hpp"
#include "nntree/rnn.hpp"

namespace nntree {
namespace {

std::string layer_name(std::size_t i) { return "layers[" + std::to_string(i) + "]"; }

const std::optional<PwlActivation>* trailing_activation(const Layer& layer) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) return &d->activation;
  if (const auto* c = std::get_if<ConvLayer>(&layer)) return &c->activation;
  return nullptr;
}

}  // namespace

TensorShape ConvLayer::output_shape(const TensorShape& in) const {
  const int h = (in.height + 2 * padding - kernel_h) / stride + 1;
  const int w = (in.width + 2 * padding - kernel_w) / stride + 1;
  if (in.height + 2 * padding < kernel_h || in.width + 2 * padding < kernel_w || h < 1 ||
      w < 1) {
    throw DimensionError("convolution output would be empty");
  }
  return {out_channels, h, w};
}

NetworkSpec::NetworkSpec(int input_dim, std::vector<Layer> layers, NetworkInfo info)
    : input_dim_(input_dim),
      declared_input_dim_(input_dim),
      layers_(std::move(layers)),
      info_(std::move(info)) {
  if (layers_.empty()) throw DimensionError("network has no layers");
  if (input_dim < 1) throw DimensionError("input_dim must be positive");

  if (is_recurrent()) {
    if (layers_.size() != 1) {
      throw DimensionError("a recurrent cell must be the only layer of its network");
    }
    const auto& cell = std::get<RnnCell>(layers_.front());
    const int h = cell.hidden();
    if (cell.w_rec.cols() != h || cell.bias_h.size() != h || cell.v_out.cols() != h) {
      throw DimensionError(layer_name(0) + ": recurrent matrices do not chain (hidden size " +
                           std::to_string(h) + ")");
    }
    if (cell.inputs() != input_dim) {
      throw DimensionError(layer_name(0) + ": u_in expects " + std::to_string(cell.inputs()) +
                           " inputs but input_dim is " + std::to_string(input_dim));
    }
    if (info_.horizon < 1) throw DimensionError("recurrent network requires horizon >= 1");
    if (info_.homogeneous) throw DimensionError("recurrent networks cannot be homogeneous");
    input_dim_ = h + info_.horizon * input_dim;
    output_dim_ = cell.outputs();
    return;
  }

  int width = input_dim;
  std::optional<TensorShape> shape = info_.input_shape;
  if (has_convolutions()) {
    if (!shape) throw DimensionError("convolutional network requires input_shape");
    if (shape->size() != input_dim) {
      throw DimensionError("input_shape does not match input_dim");
    }
  }
  bool after_dense = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    const bool last = i + 1 == layers_.size();
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (d->inputs() != width) {
        const std::string prev = i == 0 ? std::string("input") : layer_name(i - 1);
        throw DimensionError(layer_name(i) + " expects " + std::to_string(d->inputs()) +
                             " inputs but " + prev + " provides " + std::to_string(width));
      }
      if (d->bias.size() != d->outputs()) {
        throw DimensionError(layer_name(i) + ": bias length differs from output count");
      }
      width = d->outputs();
      after_dense = true;
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      if (r->weights.rows() != r->weights.cols()) {
        throw DimensionError(layer_name(i) + ": residual weights must be square");
      }
      if (r->width() != width) {
        const std::string prev = i == 0 ? std::string("input") : layer_name(i - 1);
        throw DimensionError(layer_name(i) + " has width " + std::to_string(r->width()) +
                             " but " + prev + " provides " + std::to_string(width));
      }
      if (i > 0) {
        const auto* act = trailing_activation(layers_[i - 1]);
        if (act != nullptr && act->has_value()) {
          throw DimensionError(layer_name(i) + ": residual block must follow an unactivated layer");
        }
      }
      after_dense = true;
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (after_dense) {
        throw DimensionError(layer_name(i) + ": convolutions must precede dense layers");
      }
      if (c->in_channels != shape->channels) {
        throw DimensionError(layer_name(i) + " expects " + std::to_string(c->in_channels) +
                             " channels but receives " + std::to_string(shape->channels));
      }
      if (c->kernel_h < 1 || c->kernel_w < 1 || c->stride < 1 || c->padding < 0) {
        throw DimensionError(layer_name(i) + ": invalid kernel geometry");
      }
      const std::size_t expected = static_cast<std::size_t>(c->out_channels) * c->in_channels *
                                   c->kernel_h * c->kernel_w;
      if (c->kernel.size() != expected || c->bias.size() != c->out_channels) {
        throw DimensionError(layer_name(i) + ": kernel or bias size mismatch");
      }
      try {
        shape = c->output_shape(*shape);
      } catch (const DimensionError&) {
        throw DimensionError(layer_name(i) + ": convolution output would be empty");
      }
      width = shape->size();
    } else {
      throw DimensionError(layer_name(i) + ": recurrent cell must be the only layer");
    }

    const auto* act = trailing_activation(layer);
    if (act != nullptr && !act->has_value() && !last &&
        !std::holds_alternative<ResidualBlock>(layers_[i + 1])) {
      throw DimensionError(layer_name(i) + ": only the final layer may omit its activation");
    }
  }
  output_dim_ = width;
}

bool NetworkSpec::is_recurrent() const noexcept {
  for (const auto& l : layers_) {
    if (std::holds_alternative<RnnCell>(l)) return true;
  }
  return false;
}

bool NetworkSpec::has_convolutions() const noexcept {
  for (const auto& l : layers_) {
    if (std::holds_alternative<ConvLayer>(l)) return true;
  }
  return false;
}

std::size_t ActivationTrace::decision_count() const {
  std::size_t n = 0;
  for (const auto& p : patterns) n += p.size();
  return n;
}

namespace {

// Applies `act` to the first `active` entries of x, recording regions.
void activate(const PwlActivation& act, Vector& x, int active, ActivationTrace& trace) {
  ActivationPattern pattern(active);
  for (int j = 0; j < active; ++j) {
    const RegionChoice c = act.select(x[j]);
    pattern[j] = c.region;
    x[j] = c.slope * x[j] + c.intercept;
  }
  trace.patterns.push_back(std::move(pattern));
}

Vector dense_apply(const DenseLayer& layer, const Vector& x) {
  Vector z(layer.outputs());
  for (int r = 0; r < layer.outputs(); ++r) {
    double acc = layer.bias[r];
    for (int c = 0; c < layer.inputs(); ++c) acc += layer.weights(r, c) * x[c];
    z[r] = acc;
  }
  return z;
}

Vector conv_apply(const ConvLayer& layer, const TensorShape& in_shape, const Vector& x,
                  TensorShape& out_shape) {
  out_shape = layer.output_shape(in_shape);
  Vector z(out_shape.size());
  for (int o = 0; o < layer.out_channels; ++o) {
    for (int oy = 0; oy < out_shape.height; ++oy) {
      for (int ox = 0; ox < out_shape.width; ++ox) {
        double acc = layer.bias[o];
        for (int i = 0; i < layer.in_channels; ++i) {
          for (int ky = 0; ky < layer.kernel_h; ++ky) {
            const int iy = oy * layer.stride - layer.padding + ky;
            if (iy < 0 || iy >= in_shape.height) continue;
            for (int kx = 0; kx < layer.kernel_w; ++kx) {
              const int ix = ox * layer.stride - layer.padding + kx;
              if (ix < 0 || ix >= in_shape.width) continue;
              acc += layer.at(o, i, ky, kx) * x[in_shape.index(i, iy, ix)];
            }
          }
        }
        z[out_shape.index(o, oy, ox)] = acc;
      }
    }
  }
  return z;
}

}  // namespace

ForwardResult forward(const NetworkSpec& net, const Vector& x0) {
  if (x0.size() != net.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(x0.size()) +
                         " entries, network expects " + std::to_string(net.input_dim()));
  }
  if (net.is_recurrent()) {
    const auto& cell = std::get<RnnCell>(net.layers().front());
    const int h = cell.hidden();
    const int d = cell.inputs();
    std::vector<Vector> steps;
    for (int t = 0; t < net.info().horizon; ++t) steps.push_back(x0.segment(h + t * d, d));
    RnnTrace rnn = rnn_forward(cell, x0.head(h), steps);
    return {std::move(rnn.outputs.back()), ActivationTrace{std::move(rnn.patterns)}};
  }

  const int passthrough = net.info().homogeneous ? 1 : 0;
  ForwardResult result;
  Vector x = x0;
  TensorShape shape = net.info().input_shape.value_or(TensorShape{1, 1, int(x0.size())});
  for (const Layer& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      x = dense_apply(*d, x);
      if (d->activation) {
        activate(*d->activation, x, static_cast<int>(x.size()) - passthrough, result.trace);
      }
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      Vector s = x;
      activate(r->activation, s, static_cast<int>(s.size()) - passthrough, result.trace);
      Vector next = x;
      for (int i = 0; i < r->width(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < r->width(); ++j) acc += r->weights(i, j) * s[j];
        next[i] += acc;
      }
      x = std::move(next);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      TensorShape out;
      x = conv_apply(*c, shape, x, out);
      shape = out;
      if (c->activation) activate(*c->activation, x, static_cast<int>(x.size()), result.trace);
    }
  }
  result.output = std::move(x);
  return result;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector apply_output_activation(const NetworkSpec& net, const Vector& raw) {
  if (net.info().output_activation == OutputActivation::none) return raw;
  return raw.unaryExpr([](double z) { return sigmoid(z); });
}

int predicted_class(const Vector& raw) { return raw[0] >= 0.0 ? 1 : 0; }

DenseLayer fold_normalization(const DenseLayer& layer, const NormalizationSpec& norm,
                              NormPosition position) {
  const int n = position == NormPosition::post ? layer.outputs() : layer.inputs();
  if (norm.scale.size() != n || norm.shift.size() != n || norm.running_mean.size() != n ||
      norm.running_var.size() != n) {
    throw DimensionError("fold_normalization: normalization width " +
                         std::to_string(norm.scale.size()) + " does not match layer side " +
                         std::to_string(n));
  }
  Vector gain(n);
  for (int i = 0; i < n; ++i) {
    const double var = norm.running_var[i] + norm.epsilon;
    if (!(var > 0.0)) {
      throw std::invalid_argument("fold_normalization: non-positive variance at index " +
                                  std::to_string(i));
    }
    gain[i] = norm.scale[i] / std::sqrt(var);
  }
  const Vector offset = norm.shift - gain.cwiseProduct(norm.running_mean);

  DenseLayer folded = layer;
  if (position == NormPosition::post) {
    folded.weights = gain.asDiagonal() * layer.weights;
    folded.bias = gain.cwiseProduct(layer.bias) + offset;
  } else {
    folded.weights = layer.weights * gain.asDiagonal();
    folded.bias = layer.bias + layer.weights * offset;
  }
  return folded;
}

NetworkSpec augment_bias(const NetworkSpec& net) {
  if (net.info().homogeneous) throw std::invalid_argument("augment_bias: already homogeneous");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      DenseLayer a;
      a.weights = Matrix::Zero(d->outputs() + 1, d->inputs() + 1);
      a.weights.topLeftCorner(d->outputs(), d->inputs()) = d->weights;
      a.weights.topRightCorner(d->outputs(), 1) = d->bias;
      a.weights(d->outputs(), d->inputs()) = 1.0;
      a.bias = Vector::Zero(d->outputs() + 1);
      a.activation = d->activation;
      layers.emplace_back(std::move(a));
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      ResidualBlock a{Matrix::Zero(r->width() + 1, r->width() + 1), r->activation};
      a.weights.topLeftCorner(r->width(), r->width()) = r->weights;
      layers.emplace_back(std::move(a));
    } else {
      throw std::invalid_argument("augment_bias: " + layer_name(i) +
                                  " is not a dense or residual layer");
    }
  }
  NetworkInfo info = net.info();
  info.homogeneous = true;
  return NetworkSpec(net.input_dim() + 1, std::move(layers), std::move(info));
}

long parameter_count(const NetworkSpec& net) {
  long n = 0;
  for (const Layer& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      n += d->weights.size() + d->bias.size();
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      n += r->weights.size();
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      n += static_cast<long>(c->kernel.size()) + c->bias.size();
    } else if (const auto* rnn = std::get_if<RnnCell>(&layer)) {
      n += rnn->w_rec.size() + rnn->u_in.size() + rnn->v_out.size() + rnn->bias_h.size();
    }
  }
  return n;
}

}  // namespace nntree
