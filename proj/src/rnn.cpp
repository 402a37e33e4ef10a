#include "nntree/rnn.hpp"

#include "nntree/effective.hpp"
#include "nntree/errors.hpp"

namespace nntree {
namespace {

void check_dims(const RnnCell& cell, const Vector& h0, const std::vector<Vector>& inputs) {
  if (h0.size() != cell.hidden()) throw DimensionError("rnn: h0 size differs from hidden size");
  for (const auto& x : inputs) {
    if (x.size() != cell.inputs()) throw DimensionError("rnn: input step has wrong width");
  }
  if (cell.w_rec.cols() != cell.hidden() || cell.v_out.cols() != cell.hidden() ||
      cell.bias_h.size() != cell.hidden()) {
    throw DimensionError("rnn: cell matrices do not chain");
  }
}

}  // namespace

RnnTrace rnn_forward(const RnnCell& cell, const Vector& h0, const std::vector<Vector>& inputs) {
  check_dims(cell, h0, inputs);
  RnnTrace trace;
  Vector h = h0;
  for (const Vector& x : inputs) {
    Vector pre = cell.w_rec * h + cell.u_in * x + cell.bias_h;
    ActivationPattern pattern(pre.size());
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
      const RegionChoice c = cell.activation.select(pre[j]);
      pattern[j] = c.region;
      pre[j] = c.slope * pre[j] + c.intercept;
    }
    h = std::move(pre);
    trace.hidden.push_back(h);
    trace.outputs.push_back(cell.v_out * h);
    trace.patterns.push_back(std::move(pattern));
  }
  return trace;
}

Vector rnn_effective_output(const RnnCell& cell, const Vector& h0,
                            const std::vector<Vector>& inputs,
                            const std::vector<ActivationPattern>& patterns) {
  check_dims(cell, h0, inputs);
  if (inputs.empty()) throw DimensionError("rnn_effective_output: empty input sequence");
  if (patterns.size() != inputs.size()) {
    throw DimensionError("rnn_effective_output: " + std::to_string(patterns.size()) +
                         " patterns for " + std::to_string(inputs.size()) + " time steps");
  }
  const int horizon = static_cast<int>(inputs.size());
  const int h = cell.hidden();

  auto intercepts = [&](const ActivationPattern& p) {
    Vector c(h);
    for (int j = 0; j < h; ++j) c[j] = cell.activation.intercepts()[p[j]];
    return c;
  };

  // Z_t for t = T .. 1, stored at index t - 1.
  std::vector<Matrix> chain(horizon);
  chain[horizon - 1] = mask_weights(cell.v_out, patterns[horizon - 1], cell.activation).masked;
  for (int t = horizon - 1; t >= 1; --t) {
    chain[t - 1] = chain[t] * mask_weights(cell.w_rec, patterns[t - 1], cell.activation).masked;
  }

  Vector out = chain[0] * (cell.w_rec * h0);
  for (int t = 1; t <= horizon; ++t) {
    out += chain[t - 1] * (cell.u_in * inputs[t - 1] + cell.bias_h);
  }
  for (int t = 1; t < horizon; ++t) {
    out += chain[t] * (cell.w_rec * intercepts(patterns[t - 1]));
  }
  out += cell.v_out * intercepts(patterns[horizon - 1]);
  return out;
}

Vector flatten_sequence(const Vector& h0, const std::vector<Vector>& inputs) {
  Eigen::Index n = h0.size();
  for (const auto& x : inputs) n += x.size();
  Vector flat(n);
  flat.head(h0.size()) = h0;
  Eigen::Index offset = h0.size();
  for (const auto& x : inputs) {
    flat.segment(offset, x.size()) = x;
    offset += x.size();
  }
  return flat;
}

}  // namespace nntree
