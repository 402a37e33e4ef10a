#include "nntree/conv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nntree/errors.hpp"

namespace nntree {

DenseLayer lower_conv(const ConvLayer& layer, const TensorShape& in) {
  const TensorShape out = layer.output_shape(in);
  DenseLayer dense;
  dense.weights = Matrix::Zero(out.size(), in.size());
  dense.bias = Vector(out.size());
  dense.activation = layer.activation;
  for (int o = 0; o < layer.out_channels; ++o) {
    for (int oy = 0; oy < out.height; ++oy) {
      for (int ox = 0; ox < out.width; ++ox) {
        const int row = out.index(o, oy, ox);
        dense.bias[row] = layer.bias[o];
        for (int i = 0; i < layer.in_channels; ++i) {
          for (int ky = 0; ky < layer.kernel_h; ++ky) {
            const int iy = oy * layer.stride - layer.padding + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < layer.kernel_w; ++kx) {
              const int ix = ox * layer.stride - layer.padding + kx;
              if (ix < 0 || ix >= in.width) continue;
              dense.weights(row, in.index(i, iy, ix)) += layer.at(o, i, ky, kx);
            }
          }
        }
      }
    }
  }
  return dense;
}

std::vector<TensorShape> feature_shapes(const NetworkSpec& net) {
  std::vector<TensorShape> shapes;
  TensorShape shape = net.info().input_shape.value_or(TensorShape{1, 1, net.input_dim()});
  shapes.push_back(shape);
  for (const Layer& layer : net.layers()) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      shape = c->output_shape(shape);
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      shape = {1, 1, d->outputs()};
    }
    shapes.push_back(shape);
  }
  return shapes;
}

NetworkSpec lower_convolutions(const NetworkSpec& net) {
  const auto shapes = feature_shapes(net);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      layers.emplace_back(lower_conv(*c, shapes[i]));
    } else {
      layers.push_back(layer);
    }
  }
  NetworkInfo info = net.info();
  info.input_shape.reset();
  return NetworkSpec(net.input_dim(), std::move(layers), std::move(info));
}

ConvLazyResult conv_lazy_eval(const NetworkSpec& net, const Vector& f0) {
  if (f0.size() != net.input_dim()) {
    throw DimensionError("conv_lazy_eval: input has " + std::to_string(f0.size()) +
                         " entries, network expects " + std::to_string(net.input_dim()));
  }
  const auto shapes = feature_shapes(net);
  LazyResult lazy = lazy_eval(compile_network(net), f0);

  ConvLazyResult out;
  out.output = std::move(lazy.output);
  out.output_shape = shapes.back();
  out.category = lazy.category;
  out.cost = lazy.cost;
  std::size_t pattern = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (!c->activation) continue;
      out.categorizations.push_back(
          ConvCategorization{static_cast<int>(i), shapes[i + 1], lazy.category.patterns[pattern]});
      ++pattern;
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (d->activation) ++pattern;
    }
  }
  return out;
}

ReceptiveField receptive_field(const NetworkSpec& net, int layer, int y, int x) {
  const auto& layers = net.layers();
  if (layer < 0 || layer >= static_cast<int>(layers.size())) {
    throw std::out_of_range("receptive_field: layer index out of range");
  }
  for (int l = 0; l <= layer; ++l) {
    if (!std::holds_alternative<ConvLayer>(layers[l])) {
      throw std::out_of_range("receptive_field: layer " + std::to_string(l) +
                              " is not a convolution");
    }
  }
  const auto shapes = feature_shapes(net);
  const TensorShape& out = shapes[layer + 1];
  if (y < 0 || y >= out.height || x < 0 || x >= out.width) {
    throw std::out_of_range("receptive_field: position (" + std::to_string(y) + "," +
                            std::to_string(x) + ") outside " + std::to_string(out.height) + "x" +
                            std::to_string(out.width));
  }
  int y0 = y, y1 = y, x0 = x, x1 = x;
  for (int l = layer; l >= 0; --l) {
    const auto& c = std::get<ConvLayer>(layers[l]);
    const TensorShape& in = shapes[l];
    y0 = std::max(0, y0 * c.stride - c.padding);
    y1 = std::min(in.height - 1, y1 * c.stride - c.padding + c.kernel_h - 1);
    x0 = std::max(0, x0 * c.stride - c.padding);
    x1 = std::min(in.width - 1, x1 * c.stride - c.padding + c.kernel_w - 1);
  }
  return {y0, y1, x0, x1};
}

double EffectiveKernel::apply(const Vector& f0, const TensorShape& input_shape) const {
  double acc = bias;
  for (int c = 0; c < in_channels; ++c) {
    for (int ky = 0; ky < field.height(); ++ky) {
      for (int kx = 0; kx < field.width(); ++kx) {
        acc += at(c, ky, kx) * f0[input_shape.index(c, field.y0 + ky, field.x0 + kx)];
      }
    }
  }
  return acc;
}

EffectiveKernel conv_effective_kernel(const NetworkSpec& net, const CategorizationVector& category,
                                      int layer, int channel, int y, int x) {
  const ReceptiveField field = receptive_field(net, layer, y, x);
  const auto shapes = feature_shapes(net);
  const TensorShape& out = shapes[layer + 1];
  if (channel < 0 || channel >= out.channels) {
    throw std::out_of_range("conv_effective_kernel: channel out of range");
  }
  const TensorShape& in = shapes.front();
  const EffectiveMatrix eff = effective_matrix(compile_network(net), category, layer);
  const auto row = eff.matrix.row(out.index(channel, y, x));

  EffectiveKernel k;
  k.layer = layer;
  k.channel = channel;
  k.y = y;
  k.x = x;
  k.field = field;
  k.in_channels = in.channels;
  k.weights.assign(static_cast<std::size_t>(in.channels) * field.height() * field.width(), 0.0);
  k.bias = row[in.size()];
  for (int c = 0; c < in.channels; ++c) {
    for (int iy = 0; iy < in.height; ++iy) {
      for (int ix = 0; ix < in.width; ++ix) {
        const double v = row[in.index(c, iy, ix)];
        if (field.contains(iy, ix)) {
          k.weights[(static_cast<std::size_t>(c) * field.height() + (iy - field.y0)) *
                        field.width() +
                    (ix - field.x0)] = v;
        } else {
          k.max_outside = std::max(k.max_outside, std::abs(v));
        }
      }
    }
  }
  if (k.max_outside > 1e-12) {
    throw std::logic_error("conv_effective_kernel: effective map leaks outside the receptive field");
  }
  return k;
}

}  // namespace nntree
