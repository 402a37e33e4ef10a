#pragma once

// Independent reference implementations used as test oracles. None of them
// call into the library's evaluation code; they only read layer fields.

#include <cmath>
#include <vector>

#include "nntree/network.hpp"

namespace oracle {

using nntree::Vector;

// Activation evaluated straight from its pieces: the region is the number of
// breakpoints <= z.
inline double activate(const nntree::PwlActivation& act, double z, int* region = nullptr) {
  int r = 0;
  for (double t : act.breakpoints()) r += (z >= t) ? 1 : 0;
  if (region != nullptr) *region = r;
  return act.slopes()[r] * z + act.intercepts()[r];
}

struct Trace {
  std::vector<double> output;
  std::vector<std::vector<int>> patterns;
};

// Dense and residual layers with plain loops.
inline Trace naive_forward(const nntree::NetworkSpec& net, const std::vector<double>& x0) {
  Trace t;
  std::vector<double> a = x0;
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<nntree::DenseLayer>(&layer)) {
      std::vector<double> z(d->weights.rows());
      for (int r = 0; r < d->weights.rows(); ++r) {
        double s = 0;
        for (int c = 0; c < d->weights.cols(); ++c) s += d->weights(r, c) * a[c];
        z[r] = s + d->bias[r];
      }
      if (d->activation) {
        std::vector<int> p(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = activate(*d->activation, z[j], &p[j]);
        t.patterns.push_back(p);
      }
      a = z;
    } else if (const auto* b = std::get_if<nntree::ResidualBlock>(&layer)) {
      std::vector<double> s(a.size());
      std::vector<int> p(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) s[j] = activate(b->activation, a[j], &p[j]);
      t.patterns.push_back(p);
      std::vector<double> next = a;
      for (int r = 0; r < b->weights.rows(); ++r) {
        for (int c = 0; c < b->weights.cols(); ++c) next[r] += b->weights(r, c) * s[c];
      }
      a = next;
    }
  }
  t.output = a;
  return t;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Direct cross-correlation with zero padding on a (C, H, W) tensor.
inline std::vector<double> naive_conv(const nntree::ConvLayer& c, const std::vector<double>& in,
                                      int channels, int height, int width, int* out_h,
                                      int* out_w) {
  const int oh = (height + 2 * c.padding - c.kernel_h) / c.stride + 1;
  const int ow = (width + 2 * c.padding - c.kernel_w) / c.stride + 1;
  std::vector<double> out(static_cast<std::size_t>(c.out_channels) * oh * ow);
  for (int o = 0; o < c.out_channels; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double s = c.bias[o];
        for (int i = 0; i < channels; ++i) {
          for (int ky = 0; ky < c.kernel_h; ++ky) {
            for (int kx = 0; kx < c.kernel_w; ++kx) {
              const int iy = y * c.stride + ky - c.padding;
              const int ix = x * c.stride + kx - c.padding;
              if (iy < 0 || ix < 0 || iy >= height || ix >= width) continue;
              s += c.at(o, i, ky, kx) * in[(static_cast<std::size_t>(i) * height + iy) * width + ix];
            }
          }
        }
        out[(static_cast<std::size_t>(o) * oh + y) * ow + x] = s;
      }
    }
  }
  *out_h = oh;
  *out_w = ow;
  return out;
}

// Convolutions followed by dense layers.
inline Trace naive_conv_forward(const nntree::NetworkSpec& net, const std::vector<double>& f0) {
  Trace t;
  std::vector<double> a = f0;
  nntree::TensorShape s = *net.info().input_shape;
  int channels = s.channels, height = s.height, width = s.width;
  for (const auto& layer : net.layers()) {
    if (const auto* c = std::get_if<nntree::ConvLayer>(&layer)) {
      int oh = 0, ow = 0;
      std::vector<double> z = naive_conv(*c, a, channels, height, width, &oh, &ow);
      if (c->activation) {
        std::vector<int> p(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = activate(*c->activation, z[j], &p[j]);
        t.patterns.push_back(p);
      }
      a = z;
      channels = c->out_channels;
      height = oh;
      width = ow;
    } else {
      const auto& d = std::get<nntree::DenseLayer>(layer);
      std::vector<double> z(d.weights.rows());
      for (int r = 0; r < d.weights.rows(); ++r) {
        double sum = d.bias[r];
        for (int c2 = 0; c2 < d.weights.cols(); ++c2) sum += d.weights(r, c2) * a[c2];
        z[r] = sum;
      }
      if (d.activation) {
        std::vector<int> p(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = activate(*d.activation, z[j], &p[j]);
        t.patterns.push_back(p);
      }
      a = z;
    }
  }
  t.output = a;
  return t;
}

// h_t = act(W h_{t-1} + U x_t + b), returns o_T = V h_T and the patterns.
inline Trace naive_recurrence(const nntree::RnnCell& cell, const std::vector<double>& h0,
                              const std::vector<std::vector<double>>& xs) {
  Trace t;
  std::vector<double> h = h0;
  const int n = cell.hidden();
  for (const auto& x : xs) {
    std::vector<double> next(n);
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) {
      double s = cell.bias_h[i];
      for (int j = 0; j < n; ++j) s += cell.w_rec(i, j) * h[j];
      for (std::size_t j = 0; j < x.size(); ++j) s += cell.u_in(i, j) * x[j];
      next[i] = activate(cell.activation, s, &p[i]);
    }
    h = next;
    t.patterns.push_back(p);
  }
  t.output.assign(cell.v_out.rows(), 0.0);
  for (int r = 0; r < cell.v_out.rows(); ++r) {
    for (int j = 0; j < n; ++j) t.output[r] += cell.v_out(r, j) * h[j];
  }
  return t;
}

inline double rel_dev(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / (1.0 + std::abs(b[i])));
  }
  return worst;
}

inline double rel_dev(const Vector& a, const Vector& b) { return rel_dev(to_std(a), to_std(b)); }

}  // namespace oracle
