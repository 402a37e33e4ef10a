#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "nntree/errors.hpp"
#include "nntree/generators.hpp"
#include "nntree/weights_io.hpp"
#include "oracles.hpp"

using namespace nntree;
using namespace testing_util;

TEST_CASE("region_select follows the left-closed convention") {
  const auto relu = PwlActivation::relu();
  auto c = region_select(relu, -2.0);
  CHECK(c.region == 0);
  CHECK(c.slope == 0.0);
  c = region_select(relu, 0.0);
  CHECK(c.region == 1);
  CHECK(c.slope == 1.0);
  c = region_select(PwlActivation::leaky_relu(0.3), -1.0);
  CHECK(c.region == 0);
  CHECK(c.slope == 0.3);

  const auto ht = PwlActivation::hard_tanh();
  CHECK(region_select(ht, -1.0).region == 1);
  CHECK(region_select(ht, 1.0).region == 2);
  CHECK(ht(-5.0) == -1.0);
  CHECK(ht(0.25) == 0.25);
  CHECK(ht(7.0) == 1.0);
}

TEST_CASE("region selection is total and matches the piece formula") {
  Rng rng(11);
  for (const auto& act : standard_activations()) {
    for (int i = 0; i < 2000; ++i) {
      const double z = rng.uniform(-6, 6);
      const RegionChoice c = act.select(z);
      int expected = 0;
      CHECK(act(z) == doctest::Approx(oracle::activate(act, z, &expected)).epsilon(1e-15));
      CHECK(c.region == expected);
      CHECK(c.region >= 0);
      CHECK(c.region < act.regions());
    }
    // Exactly on every breakpoint the upper region wins.
    for (std::size_t j = 0; j < act.breakpoints().size(); ++j) {
      CHECK(act.select(act.breakpoints()[j]).region == static_cast<int>(j) + 1);
    }
  }
}

TEST_CASE("activation invariants are enforced") {
  CHECK_THROWS_AS(PwlActivation("bad", {1.0, 0.0}, {0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(PwlActivation("bad", {0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PwlActivation("jump", {0.0}, {1.0, 1.0}, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PwlActivation("none", {}, {}), std::invalid_argument);
  CHECK(PwlActivation::identity().is_linear());
}

TEST_CASE("quantize_activation") {
  SUBCASE("identity has slope 1 inside the domain and no error") {
    for (int segments : {1, 3, 10}) {
      const auto q = quantize_activation([](double z) { return z; }, segments, -2, 2);
      CHECK(q.max_error < 1e-12);
      CHECK(q.activation.regions() == segments + 2);
      for (int r = 1; r <= segments; ++r) CHECK(q.activation.slopes()[r] == doctest::Approx(1.0));
    }
  }
  SUBCASE("tanh error shrinks as segments grow") {
    double previous = INFINITY;
    for (int segments : {2, 8, 32, 128}) {
      const auto q = quantize_activation([](double z) { return std::tanh(z); }, segments, -3, 3);
      // Independent grid check of the reported error.
      double worst = 0;
      for (int i = 0; i <= 20000; ++i) {
        const double z = -3 + 6.0 * i / 20000;
        worst = std::max(worst, std::abs(std::tanh(z) - q.activation(z)));
      }
      CHECK(worst <= 1.01 * q.max_error);
      CHECK(q.max_error <= 1.01 * worst);
      CHECK(q.max_error < previous);
      previous = q.max_error;
    }
  }
  SUBCASE("64 segments on [-4, 4] stay under 0.01") {
    const auto q = quantize_activation([](double z) { return std::tanh(z); }, 64, -4, 4);
    CHECK(q.max_error < 0.01);
  }
  SUBCASE("sigmoid error is also monotone") {
    double previous = INFINITY;
    for (int segments : {2, 4, 16, 64}) {
      const auto q = quantize_activation([](double z) { return sigmoid(z); }, segments, -6, 6);
      CHECK(q.max_error < previous);
      previous = q.max_error;
    }
  }
  SUBCASE("four-region quantized tanh") {
    const auto q = quantized_tanh(4);
    CHECK(q.regions() == 4);
    CHECK(q.breakpoints() == std::vector<double>{-3.0, 0.0, 3.0});
    CHECK(q(10.0) == doctest::Approx(std::tanh(3.0)));
    CHECK_THROWS(quantized_tanh(2));
  }
}

TEST_CASE("forward examples") {
  SUBCASE("identity activation has no decisions") {
    NetworkSpec net(1, {dense(mat({{2}}), vec({0}))});
    const auto r = forward(net, vec({3}));
    CHECK(r.output[0] == 6.0);
    CHECK(r.trace.decision_count() == 0);
  }
  SUBCASE("relu pair") {
    NetworkSpec net(1, {dense(mat({{1}, {-1}}), vec({0, 0}), PwlActivation::relu()),
                        dense(mat({{1, 1}}), vec({0}))});
    const auto r = forward(net, vec({2}));
    CHECK(r.output[0] == 2.0);
    REQUIRE(r.trace.patterns.size() == 1);
    CHECK(r.trace.patterns[0] == std::vector<int>{1, 0});
  }
  SUBCASE("dimension mismatch") {
    NetworkSpec net(2, {dense(mat({{1, 1}}), vec({0}))});
    CHECK_THROWS_AS(forward(net, vec({1})), DimensionError);
  }
}

TEST_CASE("forward agrees with an independent loop implementation") {
  Rng rng(5);
  for (int n = 0; n < 200; ++n) {
    const NetworkSpec net = random_dense_network(rng);
    for (int i = 0; i < 20; ++i) {
      const Vector x = random_point(rng, net.input_dim());
      const auto got = forward(net, x);
      const auto ref = oracle::naive_forward(net, oracle::to_std(x));
      CHECK(oracle::rel_dev(oracle::to_std(got.output), ref.output) <= 1e-12);
      CHECK(got.trace.patterns == ref.patterns);
    }
  }
  const NetworkSpec net = small_parabola_net();
  for (int i = 0; i < 5000; ++i) {
    const double x = -2.5 + 5.0 * i / 4999;
    const auto ref = oracle::naive_forward(net, {x});
    CHECK(std::abs(forward(net, vec({x})).output[0] - ref.output[0]) <= 1e-12);
  }
}

TEST_CASE("network validation names the offending layers") {
  try {
    NetworkSpec net(2, {dense(Matrix::Ones(3, 2), Vector::Zero(3), PwlActivation::relu()),
                        dense(Matrix::Ones(2, 2), Vector::Zero(2))});
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layers[1]") != std::string::npos);
    CHECK(msg.find("layers[0]") != std::string::npos);
  }
  CHECK_THROWS_AS(NetworkSpec(1, {dense(mat({{1}}), vec({0})), dense(mat({{1}}), vec({0}))}),
                  DimensionError);
  CHECK_THROWS_AS(NetworkSpec(1, {}), DimensionError);
}

TEST_CASE("fold_normalization") {
  SUBCASE("identity normalization leaves the layer alone") {
    DenseLayer layer = dense(mat({{1, 2}, {3, 4}}), vec({0.5, -0.5}));
    NormalizationSpec norm{Vector::Ones(2), Vector::Zero(2), Vector::Zero(2), Vector::Ones(2), 0.0};
    for (auto pos : {NormPosition::pre, NormPosition::post}) {
      const DenseLayer f = fold_normalization(layer, norm, pos);
      CHECK(f.weights == layer.weights);
      CHECK(f.bias == layer.bias);
    }
  }
  SUBCASE("closed form") {
    NormalizationSpec norm{vec({2}), vec({1}), vec({0}), vec({1}), 0.0};
    const DenseLayer f = fold_normalization(dense(mat({{1}}), vec({0})), norm, NormPosition::post);
    CHECK(f.weights(0, 0) == 2.0);
    CHECK(f.bias[0] == 1.0);
  }
  SUBCASE("random layers against the two-step computation") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int in = 1 + static_cast<int>(rng.index(4));
      const int out = 1 + static_cast<int>(rng.index(4));
      DenseLayer layer = dense(Matrix::Zero(out, in), Vector::Zero(out));
      for (int r = 0; r < out; ++r) {
        layer.bias[r] = rng.uniform(-1, 1);
        for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-1, 1);
      }
      for (auto pos : {NormPosition::pre, NormPosition::post}) {
        const int n = pos == NormPosition::post ? out : in;
        NormalizationSpec norm{random_point(rng, n, 0.5, 2), random_point(rng, n),
                               random_point(rng, n), random_point(rng, n, 0.1, 3), 1e-5};
        const DenseLayer f = fold_normalization(layer, norm, pos);
        auto normalize = [&](const Vector& v) {
          Vector o(n);
          for (int i = 0; i < n; ++i) {
            o[i] = norm.scale[i] * (v[i] - norm.running_mean[i]) /
                       std::sqrt(norm.running_var[i] + norm.epsilon) +
                   norm.shift[i];
          }
          return o;
        };
        for (int k = 0; k < 100; ++k) {
          const Vector x = random_point(rng, in);
          const Vector two_step = pos == NormPosition::post
                                      ? normalize(layer.weights * x + layer.bias)
                                      : Vector(layer.weights * normalize(x) + layer.bias);
          CHECK(oracle::rel_dev(f.weights * x + f.bias, two_step) <= 1e-9);
        }
      }
    }
  }
  SUBCASE("errors") {
    NormalizationSpec bad{vec({1}), vec({0}), vec({0}), vec({-1}), 0.0};
    CHECK_THROWS_AS(fold_normalization(dense(mat({{1}}), vec({0})), bad, NormPosition::post),
                    std::invalid_argument);
    NormalizationSpec wide{vec({1, 1}), vec({0, 0}), vec({0, 0}), vec({1, 1}), 0.0};
    CHECK_THROWS_AS(fold_normalization(dense(mat({{1}}), vec({0})), wide, NormPosition::post),
                    DimensionError);
  }
}

TEST_CASE("augment_bias") {
  SUBCASE("closed form") {
    const NetworkSpec a = augment_bias(NetworkSpec(1, {dense(mat({{3}}), vec({5}))}));
    const auto& w = std::get<DenseLayer>(a.layers()[0]).weights;
    CHECK(w == mat({{3, 5}, {0, 1}}));
    const Vector out = forward(a, vec({2, 1})).output;
    CHECK(out == vec({11, 1}));
  }
  SUBCASE("random nets keep their outputs and traces") {
    Rng rng(17);
    for (int n = 0; n < 50; ++n) {
      const NetworkSpec net = random_dense_network(rng);
      const NetworkSpec aug = augment_bias(net);
      CHECK(aug.info().homogeneous);
      for (int i = 0; i < 20; ++i) {
        const Vector x = random_point(rng, net.input_dim());
        Vector xt(x.size() + 1);
        xt << x, 1.0;
        const auto ref = forward(net, x);
        const auto got = forward(aug, xt);
        CHECK(got.output[got.output.size() - 1] == 1.0);
        CHECK(oracle::rel_dev(Vector(got.output.head(ref.output.size())), ref.output) <= 1e-12);
        CHECK(got.trace == ref.trace);
      }
    }
  }
}

TEST_CASE("weights file round trip") {
  Rng rng(23);
  const auto dir = std::filesystem::temp_directory_path() / "nntree_weights_test";
  std::filesystem::create_directories(dir);
  for (int n = 0; n < 20; ++n) {
    const NetworkSpec net = n % 3 == 0   ? random_residual_network(rng)
                            : n % 3 == 1 ? random_conv_network(rng)
                                         : random_dense_network(rng);
    const auto path = dir / "w.json";
    save_network(net, path);
    const std::string first = read_text_file(path);
    const NetworkSpec back = load_network(path);
    CHECK(dump_network(back) == first);
    const Vector x = random_point(rng, net.input_dim());
    CHECK(forward(back, x).output == forward(net, x).output);
  }
  const NetworkSpec rnn = random_rnn_network(rng);
  CHECK(dump_network(parse_network(dump_network(rnn))) == dump_network(rnn));
  std::filesystem::remove_all(dir);
}

TEST_CASE("weights file diagnostics") {
  const std::string chain = R"({"format": "nntree-weights", "version": 1, "input_dim": 2,
    "layers": [
      {"type": "dense", "shape": [3, 2], "weights": [1,2,3,4,5,6], "bias": [0,0,0],
       "activation": {"name": "relu"}},
      {"type": "dense", "shape": [2, 2], "weights": [1,2,3,4], "bias": [0,0], "activation": null}
    ]})";
  try {
    parse_network(chain);
    FAIL("expected a chain error");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layers[0]") != std::string::npos);
    CHECK(msg.find("layers[1]") != std::string::npos);
  }

  const std::string unknown = R"({"format": "nntree-weights", "version": 1, "input_dim": 1,
    "layers": [{"type": "dense", "shape": [1, 1], "weights": [1], "bias": [0],
                "activation": {"name": "swish"}},
               {"type": "dense", "shape": [1, 1], "weights": [1], "bias": [0], "activation": null}]})";
  try {
    parse_network(unknown);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "layers[0].activation.name");
  }

  CHECK_THROWS_AS(parse_network("{not json"), SchemaError);
  CHECK_THROWS_AS(parse_network(R"({"version": 1, "input_dim": 1, "layers": [
      {"type": "dense", "shape": [1, 1], "weights": [1, 2], "bias": [0], "activation": null}]})"),
                  SchemaError);
  CHECK_THROWS_AS(load_network("/nonexistent/weights.json"), std::runtime_error);
}

TEST_CASE("parameter_count") {
  CHECK(parameter_count(small_parabola_net()) == 13);
  NetworkSpec moon(2, {dense(Matrix::Ones(2, 2), Vector::Zero(2), PwlActivation::relu()),
                       dense(Matrix::Ones(2, 2), Vector::Zero(2), PwlActivation::relu()),
                       dense(Matrix::Ones(1, 2), Vector::Zero(1))});
  CHECK(parameter_count(moon) == 15);
}
