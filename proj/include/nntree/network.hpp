#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nntree/pwl.hpp"

namespace nntree {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Channel-major (C, H, W) feature-map shape.
struct TensorShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const noexcept { return channels * height * width; }
  int index(int c, int y, int x) const noexcept { return (c * height + y) * width + x; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// y = W x + b, followed by the activation when present. Rows of W are
/// output units.
struct DenseLayer {
  Matrix weights;
  Vector bias;
  std::optional<PwlActivation> activation;

  int inputs() const noexcept { return static_cast<int>(weights.cols()); }
  int outputs() const noexcept { return static_cast<int>(weights.rows()); }
};

/// x -> x + W sigma(x). The activation acts on the block input.
struct ResidualBlock {
  Matrix weights;
  PwlActivation activation;

  int width() const noexcept { return static_cast<int>(weights.rows()); }
};

/// Cross-correlation with a (C_out, C_in, M, N) kernel stored row-major.
struct ConvLayer {
  int out_channels = 1;
  int in_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  std::vector<double> kernel;
  Vector bias;
  int stride = 1;
  int padding = 0;
  std::optional<PwlActivation> activation;

  double at(int o, int i, int ky, int kx) const {
    return kernel[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w +
                  kx];
  }
  /// Throws DimensionError when the output would be empty.
  TensorShape output_shape(const TensorShape& in) const;
};

/// h_t = sigma(W h_{t-1} + U x_t + b), o_t = V h_t.
struct RnnCell {
  Matrix w_rec;
  Matrix u_in;
  Matrix v_out;
  Vector bias_h;
  PwlActivation activation;

  int hidden() const noexcept { return static_cast<int>(w_rec.rows()); }
  int inputs() const noexcept { return static_cast<int>(u_in.cols()); }
  int outputs() const noexcept { return static_cast<int>(v_out.rows()); }
};

using Layer = std::variant<DenseLayer, ResidualBlock, ConvLayer, RnnCell>;

/// Applied to the network output outside of the tree equivalence.
enum class OutputActivation { none, sigmoid };

struct NetworkInfo {
  std::string name;
  std::uint64_t seed = 0;
  /// Present for networks starting with convolutions.
  std::optional<TensorShape> input_shape;
  /// Unroll horizon for recurrent networks.
  int horizon = 0;
  OutputActivation output_activation = OutputActivation::none;
  /// Set by augment_bias: the last coordinate of every layer is a constant 1
  /// that bypasses activations.
  bool homogeneous = false;
};

/// Immutable network description. The constructor validates the dimension
/// chain and throws DimensionError naming the offending layers.
///
/// Supported compositions:
///   - dense layers, optionally preceded by convolutions;
///   - residual stacks: an unactivated dense layer (or nothing) followed by
///     residual blocks and optionally an unactivated output layer;
///   - a single recurrent cell with a declared horizon. Its flattened input
///     is [h_0; x_1; ...; x_T].
class NetworkSpec {
 public:
  NetworkSpec(int input_dim, std::vector<Layer> layers, NetworkInfo info = {});

  /// Length of the flattened vector accepted by forward().
  int input_dim() const noexcept { return input_dim_; }
  /// Input size as declared: per-step width for recurrent networks.
  int declared_input_dim() const noexcept { return declared_input_dim_; }
  int output_dim() const noexcept { return output_dim_; }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const NetworkInfo& info() const noexcept { return info_; }
  const std::string& name() const noexcept { return info_.name; }
  bool is_recurrent() const noexcept;
  bool has_convolutions() const noexcept;

 private:
  int input_dim_ = 0;
  int declared_input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<Layer> layers_;
  NetworkInfo info_;
};

/// One activated layer's region indices, unit by unit.
using ActivationPattern = std::vector<int>;

/// Region indices for every activated layer (residual block, conv layer or
/// time step) in evaluation order. Conv patterns are flattened (c, y, x).
struct ActivationTrace {
  std::vector<ActivationPattern> patterns;

  std::size_t decision_count() const;
  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;
};

struct ForwardResult {
  Vector output;
  ActivationTrace trace;
};

/// Reference layer-by-layer evaluation. The output excludes any final
/// output activation (see apply_output_activation).
ForwardResult forward(const NetworkSpec& net, const Vector& x0);

double sigmoid(double z);
Vector apply_output_activation(const NetworkSpec& net, const Vector& raw);
/// Binary class from a raw network output: raw[0] >= 0, which equals
/// sigmoid(raw[0]) >= 0.5.
int predicted_class(const Vector& raw);

/// Affine normalization y = scale * (x - mean) / sqrt(var + eps) + shift.
struct NormalizationSpec {
  Vector scale;
  Vector shift;
  Vector running_mean;
  Vector running_var;
  double epsilon = 1e-5;
};

enum class NormPosition {
  /// normalization applied to the layer input
  pre,
  /// normalization applied to the layer output (before its activation)
  post,
};

DenseLayer fold_normalization(const DenseLayer& layer, const NormalizationSpec& norm,
                              NormPosition position);

/// Homogeneous form of a dense/residual network over [x0; 1]: biases become
/// the last weight column and every layer carries a trailing [0 ... 0 1] row.
NetworkSpec augment_bias(const NetworkSpec& net);

/// Number of stored weights and biases.
long parameter_count(const NetworkSpec& net);

}  // namespace nntree
