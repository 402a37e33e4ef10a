#include <doctest.h>

#include "helpers.hpp"
#include "nntree/datasets.hpp"
#include "nntree/effective.hpp"
#include "nntree/generators.hpp"
#include "nntree/rnn.hpp"
#include "oracles.hpp"

using namespace nntree;
using namespace testing_util;

namespace {

std::vector<Vector> random_sequence(Rng& rng, int steps, int dims) {
  std::vector<Vector> xs;
  for (int t = 0; t < steps; ++t) xs.push_back(random_point(rng, dims));
  return xs;
}

std::vector<std::vector<double>> to_std(const std::vector<Vector>& xs) {
  std::vector<std::vector<double>> out;
  for (const Vector& x : xs) out.push_back(oracle::to_std(x));
  return out;
}

}  // namespace

TEST_CASE("rnn_forward follows the recurrence") {
  Rng rng(1);
  for (int n = 0; n < 50; ++n) {
    const NetworkSpec net = random_rnn_network(rng);
    const auto& cell = std::get<RnnCell>(net.layers()[0]);
    const Vector h0 = random_point(rng, cell.hidden());
    const auto xs = random_sequence(rng, 6, cell.inputs());
    const RnnTrace trace = rnn_forward(cell, h0, xs);
    const auto ref = oracle::naive_recurrence(cell, oracle::to_std(h0), to_std(xs));
    CHECK(trace.hidden.size() == 6);
    CHECK(trace.patterns == ref.patterns);
    CHECK(oracle::rel_dev(oracle::to_std(trace.outputs.back()), ref.output) <= 1e-12);
  }
}

TEST_CASE("one step") {
  RnnCell cell{mat({{0.5}}), mat({{2}}), mat({{3}}), vec({0.1}), PwlActivation::relu()};
  // h1 = relu(0.5 * 1 + 2 * 1 + 0.1) = 2.6, o1 = 7.8
  const RnnTrace t = rnn_forward(cell, vec({1}), {vec({1})});
  CHECK(t.hidden[0][0] == doctest::Approx(2.6));
  CHECK(t.outputs[0][0] == doctest::Approx(7.8));
  const Vector eff = rnn_effective_output(cell, vec({1}), {vec({1})}, t.patterns);
  CHECK(eff[0] == doctest::Approx(7.8).epsilon(1e-14));
}

TEST_CASE("identity activation telescopes to powers of W") {
  const Matrix w = mat({{0.5, 0.1}, {-0.2, 0.3}});
  const Matrix u = mat({{1}, {0.5}});
  const Matrix v = mat({{1, -1}});
  const Vector b = vec({0.05, -0.1});
  RnnCell cell{w, u, v, b, PwlActivation::identity()};
  Rng rng(2);
  const Vector h0 = random_point(rng, 2);
  const auto xs = random_sequence(rng, 4, 1);
  Vector expected = w * w * w * w * h0;
  Matrix power = Matrix::Identity(2, 2);
  for (int t = 3; t >= 0; --t) {
    expected += power * (u * xs[t] + b);
    power = power * w;
  }
  expected = v * expected;
  const RnnTrace trace = rnn_forward(cell, h0, xs);
  CHECK(oracle::rel_dev(rnn_effective_output(cell, h0, xs, trace.patterns), expected) <= 1e-12);
  CHECK(oracle::rel_dev(trace.outputs.back(), expected) <= 1e-12);
}

TEST_CASE("effective output of random cells") {
  Rng rng(3);
  for (int n = 0; n < 100; ++n) {
    const NetworkSpec net = random_rnn_network(rng, 1 + static_cast<int>(rng.index(8)));
    const auto& cell = std::get<RnnCell>(net.layers()[0]);
    const int horizon = net.info().horizon;
    const Vector h0 = random_point(rng, cell.hidden());
    const auto xs = random_sequence(rng, horizon, cell.inputs());
    const auto ref = oracle::naive_recurrence(cell, oracle::to_std(h0), to_std(xs));
    const Vector eff = rnn_effective_output(cell, h0, xs, ref.patterns);
    CHECK(oracle::rel_dev(oracle::to_std(eff), ref.output) <= 1e-8);

    // The unrolled network sees the flattened sequence.
    const Vector flat = flatten_sequence(h0, xs);
    CHECK(flat.size() == net.input_dim());
    const auto f = forward(net, flat);
    CHECK(oracle::rel_dev(oracle::to_std(f.output), ref.output) <= 1e-12);
    CHECK(f.trace.patterns == ref.patterns);
    const LazyResult lazy = lazy_eval(net, flat);
    CHECK(oracle::rel_dev(oracle::to_std(lazy.output), ref.output) <= 1e-8);
    CHECK(lazy.category.patterns == ref.patterns);
  }
}

TEST_CASE("unrolled depth counts hidden units per step") {
  Rng rng(4);
  const NetworkSpec net = random_rnn_network(rng, 5);
  const auto& cell = std::get<RnnCell>(net.layers()[0]);
  const CompiledNetwork c = compile_network(net);
  if (!cell.activation.is_linear()) CHECK(c.depth() == 5 * cell.hidden());
  CHECK(c.input_dim == cell.hidden() + 5 * cell.inputs());
  CHECK(c.output_dim == cell.outputs());
}
