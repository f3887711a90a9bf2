#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tabnet/error.hpp"

namespace tabnet::model {

/// Dense NCHW float batch.
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const { return c * plane(); }
  std::size_t size() const { return data.size(); }

  float* sample(int i) { return data.data() + i * sample_size(); }
  const float* sample(int i) const { return data.data() + i * sample_size(); }
  float* channel(int i, int k) { return sample(i) + k * plane(); }
  const float* channel(int i, int k) const { return sample(i) + k * plane(); }

  float& at(int i, int k, int r, int col) { return channel(i, k)[static_cast<std::size_t>(r) * w + col]; }
  float at(int i, int k, int r, int col) const {
    return channel(i, k)[static_cast<std::size_t>(r) * w + col];
  }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

/// Trainable array with its accumulated gradient.
struct Parameter {
  std::string name;
  std::vector<float> value;
  std::vector<float> grad;

  Parameter(std::string n, std::size_t count) : name(std::move(n)), value(count), grad(count) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

}  // namespace tabnet::model
