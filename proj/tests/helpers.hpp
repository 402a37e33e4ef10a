#pragma once

#include <initializer_list>
#include <vector>

#include "nntree/network.hpp"

namespace testing_util {

using nntree::DenseLayer;
using nntree::Matrix;
using nntree::Vector;

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline DenseLayer dense(Matrix w, Vector b, std::optional<nntree::PwlActivation> act = {}) {
  return {std::move(w), std::move(b), std::move(act)};
}

// Hand-set 1-2-2-1 leaky-ReLU network of the parabola shape.
inline nntree::NetworkSpec small_parabola_net() {
  const auto act = nntree::PwlActivation::leaky_relu(0.3);
  std::vector<nntree::Layer> layers{
      dense(mat({{1.3}, {-0.9}}), vec({-0.4, 0.2}), act),
      dense(mat({{0.8, 1.1}, {-0.7, 0.6}}), vec({0.1, -0.3}), act),
      dense(mat({{1.5, -1.2}}), vec({0.25})),
  };
  nntree::NetworkInfo info;
  info.name = "small-parabola";
  return nntree::NetworkSpec(1, std::move(layers), info);
}

}  // namespace testing_util
