#include "nntree/effective.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "nntree/conv.hpp"
#include "nntree/errors.hpp"

namespace nntree {
namespace {

Matrix augmented(const Matrix& w, const Vector& b) {
  Matrix m = Matrix::Zero(w.rows() + 1, w.cols() + 1);
  m.topLeftCorner(w.rows(), w.cols()) = w;
  m.topRightCorner(w.rows(), 1) = b;
  m(w.rows(), w.cols()) = 1.0;
  return m;
}

Matrix residual_map(const Matrix& w) {
  Matrix m = Matrix::Zero(w.rows() + 1, w.cols() + 1);
  m.topLeftCorner(w.rows(), w.cols()) = w;
  return m;
}

CompiledNetwork compile_layers(const NetworkSpec& net) {
  const int passthrough = net.info().homogeneous ? 1 : 0;
  CompiledNetwork out;
  out.input_dim = net.input_dim();
  out.output_dim = net.output_dim();
  out.initial = Matrix::Identity(net.input_dim() + 1, net.input_dim() + 1);

  bool started = false;
  int state_dim = net.input_dim();
  std::optional<PwlActivation> pending;
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const int index = static_cast<int>(i);
    if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
      Matrix map = augmented(d->weights, d->bias);
      if (!started) {
        out.initial = std::move(map);
      } else {
        out.steps.push_back(CompiledStep{pending, state_dim - passthrough, false, std::move(map),
                                         index - 1});
      }
      pending = d->activation;
      state_dim = d->outputs();
    } else if (const auto* r = std::get_if<ResidualBlock>(&layers[i])) {
      out.steps.push_back(
          CompiledStep{r->activation, state_dim - passthrough, true, residual_map(r->weights),
                       index});
      pending.reset();
    } else {
      throw std::invalid_argument("compile_network: unsupported layer kind at layers[" +
                                  std::to_string(i) + "]");
    }
    started = true;
  }
  if (pending) {
    out.steps.push_back(CompiledStep{pending, state_dim - passthrough, false,
                                     Matrix::Identity(state_dim + 1, state_dim + 1),
                                     static_cast<int>(layers.size()) - 1});
  }
  return out;
}

// State before step t (1-based) is [pre_t; x_{t+1} .. x_T; 1].
CompiledNetwork compile_recurrent(const NetworkSpec& net) {
  const auto& cell = std::get<RnnCell>(net.layers().front());
  const int h = cell.hidden();
  const int d = cell.inputs();
  const int horizon = net.info().horizon;

  auto transition = [&](int remaining_after) {
    // Maps [h_t; x_{t+1} .. x_T; 1] (remaining_after + 1 future inputs) to
    // [W h_t + U x_{t+1} + b; x_{t+2} .. x_T; 1].
    const int cols = h + (remaining_after + 1) * d + 1;
    const int rows = h + remaining_after * d + 1;
    Matrix m = Matrix::Zero(rows, cols);
    m.topLeftCorner(h, h) = cell.w_rec;
    m.block(0, h, h, d) = cell.u_in;
    m.block(0, cols - 1, h, 1) = cell.bias_h;
    for (int j = 0; j < remaining_after * d; ++j) m(h + j, h + d + j) = 1.0;
    m(rows - 1, cols - 1) = 1.0;
    return m;
  };

  CompiledNetwork out;
  out.input_dim = net.input_dim();
  out.output_dim = cell.outputs();
  out.initial = transition(horizon - 1);
  for (int t = 1; t < horizon; ++t) {
    out.steps.push_back(CompiledStep{cell.activation, h, false, transition(horizon - t - 1), t - 1});
  }
  Matrix readout = Matrix::Zero(cell.outputs() + 1, h + 1);
  readout.topLeftCorner(cell.outputs(), h) = cell.v_out;
  readout(cell.outputs(), h) = 1.0;
  out.steps.push_back(CompiledStep{cell.activation, h, false, std::move(readout), horizon - 1});
  return out;
}

void check_pattern(const ActivationPattern& pattern, int expected, const PwlActivation& act) {
  if (static_cast<int>(pattern.size()) != expected) {
    throw DimensionError("activation pattern has " + std::to_string(pattern.size()) +
                         " entries, expected " + std::to_string(expected));
  }
  for (int r : pattern) {
    if (r < 0 || r >= act.regions()) {
      throw DimensionError("region index " + std::to_string(r) + " outside [0, " +
                           std::to_string(act.regions()) + ")");
    }
  }
}

}  // namespace

double apply_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Vector& x,
                 PathCost* cost) {
  const Eigen::Index n = x.size();
  double acc = row[n];
  for (Eigen::Index j = 0; j < n; ++j) acc += row[j] * x[j];
  if (cost != nullptr) {
    cost->multiplies += n;
    cost->additions += n;
  }
  return acc;
}

int CompiledNetwork::pattern_count() const {
  int n = 0;
  for (const auto& s : steps) n += s.activation ? 1 : 0;
  return n;
}

int CompiledNetwork::depth() const {
  int d = 0;
  for (const auto& s : steps) d += s.branches() ? s.decision_units : 0;
  return d;
}

std::vector<int> CompiledNetwork::widths() const {
  std::vector<int> w;
  for (const auto& s : steps) {
    if (s.branches()) w.push_back(s.decision_units);
  }
  return w;
}

double CompiledNetwork::leaf_count() const {
  double n = 1.0;
  for (const auto& s : steps) {
    if (s.branches()) n *= std::pow(static_cast<double>(s.activation->regions()), s.decision_units);
  }
  return n;
}

std::string CompiledNetwork::leaf_count_expression() const {
  std::map<int, int> exponents;
  for (const auto& s : steps) {
    if (s.branches()) exponents[s.activation->regions()] += s.decision_units;
  }
  if (exponents.empty()) return "1";
  std::string out;
  for (const auto& [k, e] : exponents) {
    if (!out.empty()) out += "*";
    out += std::to_string(k) + "^" + std::to_string(e);
  }
  return out;
}

CompiledNetwork compile_network(const NetworkSpec& net) {
  if (net.is_recurrent()) return compile_recurrent(net);
  if (net.has_convolutions()) return compile_layers(lower_convolutions(net));
  return compile_layers(net);
}

MaskedWeights mask_weights(const Matrix& w, const ActivationPattern& pattern,
                           const PwlActivation& act) {
  check_pattern(pattern, static_cast<int>(w.cols()), act);
  MaskedWeights out{w, Vector::Zero(w.rows())};
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    const int r = pattern[j];
    const double intercept = act.intercepts()[r];
    if (intercept != 0.0) out.intercept_contribution += w.col(j) * intercept;
    out.masked.col(j) *= act.slopes()[r];
  }
  return out;
}

Matrix apply_step(const CompiledStep& step, const Matrix& current,
                  const ActivationPattern& pattern) {
  Matrix m = step.map;
  if (step.activation) {
    const int units = step.decision_units;
    MaskedWeights masked = mask_weights(step.map.leftCols(units), pattern, *step.activation);
    m.leftCols(units) = masked.masked;
    m.col(m.cols() - 1) += masked.intercept_contribution;
  }
  Matrix next = m * current;
  if (step.residual) next += current;
  return next;
}

EffectiveMatrix effective_matrix(const CompiledNetwork& net, const CategorizationVector& category,
                                 int stage) {
  if (stage < 0 || stage > static_cast<int>(net.steps.size())) {
    throw DimensionError("effective_matrix: stage " + std::to_string(stage) + " out of range");
  }
  EffectiveMatrix out{net.initial, stage, {}};
  std::size_t used = 0;
  for (int s = 0; s < stage; ++s) {
    const CompiledStep& step = net.steps[s];
    ActivationPattern pattern;
    if (step.activation) {
      if (used >= category.patterns.size()) {
        throw DimensionError("effective_matrix: categorization has " +
                             std::to_string(category.patterns.size()) +
                             " patterns, stage needs more");
      }
      pattern = category.patterns[used++];
      out.category.patterns.push_back(pattern);
    }
    out.matrix = apply_step(step, out.matrix, pattern);
  }
  return out;
}

EffectiveMatrix effective_matrix(const NetworkSpec& net, const CategorizationVector& category,
                                 int stage) {
  return effective_matrix(compile_network(net), category, stage);
}

LazyResult lazy_eval(const CompiledNetwork& net, const Vector& x0) {
  if (x0.size() != net.input_dim) {
    throw DimensionError("lazy_eval: input has " + std::to_string(x0.size()) +
                         " entries, network expects " + std::to_string(net.input_dim));
  }
  LazyResult out;
  Matrix current = net.initial;
  for (const CompiledStep& step : net.steps) {
    ActivationPattern pattern;
    if (step.activation) {
      pattern.assign(step.decision_units, 0);
      if (step.branches()) {
        for (int j = 0; j < step.decision_units; ++j) {
          const double z = apply_row(current.row(j), x0, &out.cost);
          int tests = 0;
          pattern[j] = select_region(step.activation->breakpoints(), z, &tests);
          out.cost.comparisons += tests;
        }
      }
      out.category.patterns.push_back(pattern);
    }
    current = apply_step(step, current, pattern);
  }
  out.output.resize(net.output_dim);
  for (int r = 0; r < net.output_dim; ++r) out.output[r] = apply_row(current.row(r), x0, &out.cost);
  return out;
}

LazyResult lazy_eval(const NetworkSpec& net, const Vector& x0) {
  return lazy_eval(compile_network(net), x0);
}

Matrix residual_step_matrix(const ResidualBlock& block, const ActivationPattern& pattern) {
  const int d = block.width();
  const MaskedWeights masked = mask_weights(block.weights, pattern, block.activation);
  Matrix m = Matrix::Identity(d + 1, d + 1);
  m.topLeftCorner(d, d) += masked.masked;
  m.topRightCorner(d, 1) += masked.intercept_contribution;
  return m;
}

EffectiveMatrix residual_effective(const NetworkSpec& net, const CategorizationVector& category,
                                   int stage) {
  if (net.info().homogeneous) {
    throw std::invalid_argument("residual_effective: expects a non-homogeneous network");
  }
  const auto& layers = net.layers();
  std::size_t first_block = 0;
  EffectiveMatrix out{Matrix::Identity(net.input_dim() + 1, net.input_dim() + 1), stage, {}};
  if (!layers.empty()) {
    if (const auto* d = std::get_if<DenseLayer>(&layers.front())) {
      out.matrix = augmented(d->weights, d->bias);
      first_block = 1;
    }
  }
  for (int b = 0; b < stage; ++b) {
    const std::size_t li = first_block + b;
    if (li >= layers.size() || !std::holds_alternative<ResidualBlock>(layers[li])) {
      throw DimensionError("residual_effective: stage " + std::to_string(stage) +
                           " exceeds the residual stack");
    }
    if (static_cast<std::size_t>(b) >= category.patterns.size()) {
      throw DimensionError("residual_effective: categorization has too few patterns");
    }
    out.matrix = residual_step_matrix(std::get<ResidualBlock>(layers[li]), category.patterns[b]) *
                 out.matrix;
    out.category.patterns.push_back(category.patterns[b]);
  }
  return out;
}

}  // namespace nntree
