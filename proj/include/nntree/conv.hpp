#pragma once

#include <vector>

#include "nntree/effective.hpp"
#include "nntree/network.hpp"

namespace nntree {

/// Dense operator equivalent to `layer` on inputs of shape `in`: rows index
/// output (c, y, x) and columns input (c, y, x), both channel-major.
DenseLayer lower_conv(const ConvLayer& layer, const TensorShape& in);

/// Replaces every convolution by its unrolled dense operator at the declared
/// input shape. Other layers are kept as they are.
NetworkSpec lower_convolutions(const NetworkSpec& net);

/// Feature-map shape entering each layer (index i) and after the last one
/// (index n). Dense layers report {1, 1, width}.
std::vector<TensorShape> feature_shapes(const NetworkSpec& net);

/// Region indices of one activated convolution, per output channel and
/// spatial position.
struct ConvCategorization {
  int layer = 0;
  TensorShape shape;
  ActivationPattern regions;

  int region(int c, int y, int x) const { return regions[shape.index(c, y, x)]; }
};

struct ConvLazyResult {
  Vector output;
  /// Shape of the output when the network ends in a convolution.
  TensorShape output_shape;
  std::vector<ConvCategorization> categorizations;
  /// The same regions as one categorization vector, usable with
  /// conv_effective_kernel.
  CategorizationVector category;
  PathCost cost;
};

/// Lazy effective-matrix evaluation of a convolutional network.
ConvLazyResult conv_lazy_eval(const NetworkSpec& net, const Vector& f0);

/// Inclusive input-space window [y0, y1] x [x0, x1] feeding one position of
/// a convolution layer's pre-activation, clipped to the input.
struct ReceptiveField {
  int y0 = 0;
  int y1 = 0;
  int x0 = 0;
  int x1 = 0;

  int height() const noexcept { return y1 - y0 + 1; }
  int width() const noexcept { return x1 - x0 + 1; }
  bool contains(int y, int x) const noexcept { return y >= y0 && y <= y1 && x >= x0 && x <= x1; }
};

/// Throws std::out_of_range for positions outside the layer output.
ReceptiveField receptive_field(const NetworkSpec& net, int layer, int y, int x);

/// Linear map from the receptive-field patch of the network input to one
/// pre-activation value of a convolution layer, valid for the categorization
/// it was built from.
struct EffectiveKernel {
  int layer = 0;
  int channel = 0;
  int y = 0;
  int x = 0;
  ReceptiveField field;
  int in_channels = 1;
  /// (in_channels, field.height(), field.width()) row-major.
  std::vector<double> weights;
  double bias = 0.0;
  /// Largest |entry| of the unrolled effective row outside the field.
  double max_outside = 0.0;

  double at(int c, int ky, int kx) const {
    return weights[(static_cast<std::size_t>(c) * field.height() + ky) * field.width() + kx];
  }
  /// Applies the kernel to the matching patch of the full input tensor.
  double apply(const Vector& f0, const TensorShape& input_shape) const;
};

/// Effective kernel of conv layer `layer` at output (channel, y, x).
/// `category` must hold the patterns of all earlier activated layers. Throws
/// std::logic_error when the unrolled row leaks outside the analytical
/// receptive field by more than 1e-12.
EffectiveKernel conv_effective_kernel(const NetworkSpec& net, const CategorizationVector& category,
                                      int layer, int channel, int y, int x);

}  // namespace nntree
