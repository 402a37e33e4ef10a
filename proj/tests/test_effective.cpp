#include <doctest.h>

#include "helpers.hpp"
#include "nntree/datasets.hpp"
#include "nntree/effective.hpp"
#include "nntree/errors.hpp"
#include "nntree/generators.hpp"
#include "oracles.hpp"

using namespace nntree;
using namespace testing_util;

namespace {

// Pre-activations of every dense layer, computed with plain loops.
std::vector<std::vector<double>> naive_preactivations(const NetworkSpec& net,
                                                      const std::vector<double>& x0) {
  std::vector<std::vector<double>> out;
  std::vector<double> a = x0;
  for (const auto& layer : net.layers()) {
    const auto& d = std::get<DenseLayer>(layer);
    std::vector<double> z(d.weights.rows());
    for (int r = 0; r < d.weights.rows(); ++r) {
      z[r] = d.bias[r];
      for (int c = 0; c < d.weights.cols(); ++c) z[r] += d.weights(r, c) * a[c];
    }
    out.push_back(z);
    if (d.activation) {
      for (double& v : z) v = oracle::activate(*d.activation, v);
    }
    a = z;
  }
  return out;
}

// Comparisons needed by an upward scan that stops at the first breakpoint above z.
int scan_tests(const PwlActivation& act, int region) {
  const int k = act.regions();
  return std::min(region + 1, k - 1);
}

Vector augmented_input(const Vector& x) {
  Vector xt(x.size() + 1);
  xt << x, 1.0;
  return xt;
}

bool homogeneous_row(const Matrix& m) {
  const int r = static_cast<int>(m.rows()) - 1;
  for (int c = 0; c + 1 < m.cols(); ++c) {
    if (m(r, c) != 0.0) return false;
  }
  return m(r, m.cols() - 1) == 1.0;
}

}  // namespace

TEST_CASE("mask_weights") {
  const Matrix w = mat({{1, 2}, {3, 4}});
  SUBCASE("relu zeroes inactive columns") {
    const auto m = mask_weights(w, {1, 0}, PwlActivation::relu());
    CHECK(m.masked == mat({{1, 0}, {3, 0}}));
    CHECK(m.intercept_contribution == vec({0, 0}));
  }
  SUBCASE("leaky scales by the negative slope") {
    const auto m = mask_weights(w, {0, 1}, PwlActivation::leaky_relu(0.3));
    CHECK(m.masked.isApprox(mat({{0.3, 2}, {0.9, 4}}), 1e-15));
  }
  SUBCASE("saturated hard tanh moves everything into the intercept") {
    const auto m = mask_weights(w, {0, 2}, PwlActivation::hard_tanh());
    CHECK(m.masked == Matrix::Zero(2, 2));
    CHECK(m.intercept_contribution == vec({1, 1}));
  }
  SUBCASE("pattern length must match") {
    CHECK_THROWS_AS(mask_weights(w, {1}, PwlActivation::relu()), DimensionError);
  }
}

TEST_CASE("apply_row tallies d0 multiplies and additions") {
  PathCost cost;
  const double v = apply_row(Eigen::RowVector3d(2, -1, 0.5), vec({3, 4}), &cost);
  CHECK(v == 2.5);
  CHECK(cost.multiplies == 2);
  CHECK(cost.additions == 2);
  CHECK(cost.comparisons == 0);
}

TEST_CASE("effective matrix of stage 0 is the augmented first layer") {
  const NetworkSpec net = small_parabola_net();
  const auto& first = std::get<DenseLayer>(net.layers()[0]);
  const EffectiveMatrix e = effective_matrix(net, forward(net, vec({0.3})).trace, 0);
  CHECK(e.matrix == mat({{first.weights(0, 0), first.bias[0]},
                         {first.weights(1, 0), first.bias[1]},
                         {0, 1}}));
}

TEST_CASE("effective matrices reproduce every pre-activation") {
  Rng rng(101);
  for (int n = 0; n < 200; ++n) {
    const NetworkSpec net = random_dense_network(rng);
    const int layers = static_cast<int>(net.layers().size());
    for (int i = 0; i < 10; ++i) {
      const Vector x = random_point(rng, net.input_dim());
      const auto pre = naive_preactivations(net, oracle::to_std(x));
      const auto cat = oracle::naive_forward(net, oracle::to_std(x)).patterns;
      CategorizationVector category{cat};
      for (int s = 0; s < layers; ++s) {
        const EffectiveMatrix e = effective_matrix(net, category, s);
        CHECK(homogeneous_row(e.matrix));
        CHECK(e.matrix.cols() == net.input_dim() + 1);
        const Vector z = e.matrix * augmented_input(x);
        CHECK(oracle::rel_dev(oracle::to_std(Vector(z.head(z.size() - 1))), pre[s]) <= 1e-10);
      }
    }
  }
}

TEST_CASE("effective_matrix rejects short categorizations") {
  const NetworkSpec net = small_parabola_net();
  CHECK_THROWS_AS(effective_matrix(net, CategorizationVector{{{1, 1}}}, 2), DimensionError);
  CHECK_THROWS_AS(effective_matrix(net, CategorizationVector{{{1}, {1, 1}}}, 2), DimensionError);
}

TEST_CASE("lazy evaluation matches forward with the documented cost") {
  Rng rng(202);
  for (int n = 0; n < 1000; ++n) {
    const NetworkSpec net = random_dense_network(rng);
    const CompiledNetwork compiled = compile_network(net);
    for (int i = 0; i < 10; ++i) {
      const Vector x = random_point(rng, net.input_dim());
      const auto ref = oracle::naive_forward(net, oracle::to_std(x));
      const LazyResult lazy = lazy_eval(compiled, x);
      CHECK(oracle::rel_dev(oracle::to_std(lazy.output), ref.output) <= 1e-9);
      CHECK(lazy.category.patterns == ref.patterns);

      long comparisons = 0;
      long rows = net.output_dim();
      std::size_t p = 0;
      for (const auto& layer : net.layers()) {
        const auto& d = std::get<DenseLayer>(layer);
        if (!d.activation) continue;
        if (!d.activation->is_linear()) {
          rows += d.outputs();
          for (int region : ref.patterns[p]) comparisons += scan_tests(*d.activation, region);
        }
        ++p;
      }
      CHECK(lazy.cost.comparisons == comparisons);
      CHECK(lazy.cost.multiplies == rows * net.input_dim());
      CHECK(lazy.cost.additions == rows * net.input_dim());
    }
  }
}

TEST_CASE("lazy evaluation on the hand-set network") {
  const NetworkSpec net = small_parabola_net();
  const LazyResult r = lazy_eval(net, vec({1.0}));
  // 1.3 - 0.4 > 0 and -0.9 + 0.2 < 0.
  CHECK(r.category.patterns[0] == std::vector<int>{1, 0});
  CHECK(r.cost.comparisons == 4);
  CHECK(r.cost.multiplies == 5);
  CHECK(r.output[0] == doctest::Approx(forward(net, vec({1.0})).output[0]).epsilon(1e-14));
  CHECK_THROWS_AS(lazy_eval(net, vec({1.0, 2.0})), DimensionError);
}

TEST_CASE("compiled shape") {
  const CompiledNetwork c = compile_network(small_parabola_net());
  CHECK(c.depth() == 4);
  CHECK(c.widths() == std::vector<int>{2, 2});
  CHECK(c.leaf_count() == 16.0);
  CHECK(c.leaf_count_expression() == "2^4");
  CHECK(c.pattern_count() == 2);
  CHECK(homogeneous_row(c.initial));
}

TEST_CASE("identity activations make no decisions") {
  NetworkSpec net(2, {dense(mat({{1, 2}, {3, 4}}), vec({0, 1}), PwlActivation::identity()),
                      dense(mat({{1, -1}}), vec({0}))});
  const CompiledNetwork c = compile_network(net);
  CHECK(c.depth() == 0);
  const LazyResult r = lazy_eval(c, vec({1, 1}));
  CHECK(r.cost.comparisons == 0);
  CHECK(r.output[0] == forward(net, vec({1, 1})).output[0]);
}

TEST_CASE("residual steps") {
  SUBCASE("one block by hand") {
    NetworkSpec net(2, {ResidualBlock{mat({{0, 1}, {1, 0}}), PwlActivation::relu()}});
    // x = (2, -1): sigma(x) = (2, 0), x + W sigma(x) = (2, 1).
    const auto r = forward(net, vec({2, -1}));
    CHECK(r.output == vec({2, 1}));
    const Matrix step = residual_step_matrix(std::get<ResidualBlock>(net.layers()[0]), {1, 0});
    CHECK(step == mat({{1, 0, 0}, {1, 1, 0}, {0, 0, 1}}));
    CHECK(lazy_eval(net, vec({2, -1})).output == vec({2, 1}));
  }
  SUBCASE("random stacks") {
    Rng rng(303);
    for (int n = 0; n < 50; ++n) {
      const NetworkSpec net = random_residual_network(rng);
      const CompiledNetwork compiled = compile_network(net);
      for (int i = 0; i < 20; ++i) {
        const Vector x = random_point(rng, net.input_dim());
        const auto ref = oracle::naive_forward(net, oracle::to_std(x));
        const LazyResult lazy = lazy_eval(compiled, x);
        CHECK(oracle::rel_dev(oracle::to_std(lazy.output), ref.output) <= 1e-9);
        CHECK(lazy.category.patterns == ref.patterns);

        // Direct product of I + W D(a) factors against the naive state.
        const CategorizationVector cat{ref.patterns};
        std::vector<double> state = oracle::to_std(x);
        std::size_t start = 0;
        if (const auto* d = std::get_if<DenseLayer>(&net.layers()[0])) {
          state.assign(d->weights.rows(), 0.0);
          for (int r = 0; r < d->weights.rows(); ++r) {
            state[r] = d->bias[r];
            for (int c = 0; c < d->weights.cols(); ++c) state[r] += d->weights(r, c) * x[c];
          }
          start = 1;
        }
        for (std::size_t b = 0; b <= ref.patterns.size(); ++b) {
          const EffectiveMatrix e = residual_effective(net, cat, static_cast<int>(b));
          CHECK(homogeneous_row(e.matrix));
          const Vector z = e.matrix * augmented_input(x);
          CHECK(oracle::rel_dev(oracle::to_std(Vector(z.head(z.size() - 1))), state) <= 1e-10);
          if (b == ref.patterns.size()) break;
          const auto& block = std::get<ResidualBlock>(net.layers()[start + b]);
          std::vector<double> next = state;
          for (int r = 0; r < block.width(); ++r) {
            for (int c = 0; c < block.width(); ++c) {
              next[r] += block.weights(r, c) * oracle::activate(block.activation, state[c]);
            }
          }
          state = next;
        }
      }
    }
  }
}
