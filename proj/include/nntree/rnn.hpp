#pragma once

#include <vector>

#include "nntree/network.hpp"

namespace nntree {

struct RnnTrace {
  /// h_1 .. h_T
  std::vector<Vector> hidden;
  /// o_1 .. o_T
  std::vector<Vector> outputs;
  /// a_1 .. a_T, region index per hidden unit
  std::vector<ActivationPattern> patterns;
};

RnnTrace rnn_forward(const RnnCell& cell, const Vector& h0, const std::vector<Vector>& inputs);

/// o_T computed only from effective-matrix chains selected by the patterns:
///
///   Z_T = V D_T,   Z_i = Z_{i+1} W D_i
///   o_T = Z_1 W h_0 + sum_i Z_i (U x_i + b) + sum_t Z_{t+1} W c_t + V c_T
///
/// where D_t holds the region slopes and c_t the region intercepts of step t.
/// The chain for the h_0 term uses the same empty-product convention as the
/// input terms (Z_T alone when T = 1).
Vector rnn_effective_output(const RnnCell& cell, const Vector& h0,
                            const std::vector<Vector>& inputs,
                            const std::vector<ActivationPattern>& patterns);

/// [h_0; x_1; ...; x_T], the input layout of recurrent NetworkSpecs.
Vector flatten_sequence(const Vector& h0, const std::vector<Vector>& inputs);

}  // namespace nntree
