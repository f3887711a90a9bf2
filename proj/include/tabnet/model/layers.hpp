#pragma once

#include <memory>
#include <vector>

#include "tabnet/model/tensor.hpp"
#include "tabnet/rng.hpp"

namespace tabnet::model {

// Layers cache what their backward pass needs from the most recent forward
// call; backward must follow the matching forward. Parameter gradients
// accumulate until zero_grad.

class Conv2d {
 public:
  /// Square kernel, stride 1, zero padding kernel/2 (so spatial size is kept).
  Conv2d(std::string name, int in_channels, int out_channels, int kernel);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void init(Rng& rng);
  void collect(std::vector<Parameter*>& out) { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  void im2col(const float* src, int h, int w, float* col) const;
  void col2im(const float* col, int h, int w, float* dst) const;

  int in_, out_, kernel_;
  Parameter weight_;  // out x (in * k * k)
  Parameter bias_;
  Tensor input_;
  std::vector<float> col_;
};

/// 2x2 stride-2 transposed convolution (doubles H and W).
class UpConv2x2 {
 public:
  UpConv2x2(std::string name, int in_channels, int out_channels);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void init(Rng& rng);
  void collect(std::vector<Parameter*>& out) { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  int in_, out_;
  Parameter weight_;  // (out * 4) x in, row = o * 4 + (dy * 2 + dx)
  Parameter bias_;
  Tensor input_;
};

/// Per-sample, per-channel normalization over H x W with learned scale and shift.
class InstanceNorm {
 public:
  InstanceNorm(std::string name, int channels, float eps = 1e-5f);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(std::vector<Parameter*>& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  int channels_;
  float eps_;
  Parameter gamma_;
  Parameter beta_;
  Tensor normalized_;
  std::vector<float> inv_std_;
};

class LeakyRelu {
 public:
  explicit LeakyRelu(float slope = 0.01f) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

 private:
  float slope_;
  Tensor input_;
};

class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

 private:
  int in_h_ = 0, in_w_ = 0;
  std::vector<std::size_t> argmax_;
};

/// (conv3x3 -> instance norm -> leaky ReLU) x 2.
class ConvBlock {
 public:
  ConvBlock(const std::string& name, int in_channels, int out_channels);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void init(Rng& rng);
  void collect(std::vector<Parameter*>& out);

 private:
  Conv2d conv1_;
  InstanceNorm norm1_;
  LeakyRelu act1_;
  Conv2d conv2_;
  InstanceNorm norm2_;
  LeakyRelu act2_;
};

/// Channel softmax per pixel.
Tensor softmax_channels(const Tensor& logits);

/// Maps dL/dprobs to dL/dlogits given the softmax output.
Tensor softmax_backward(const Tensor& probs, const Tensor& grad_probs);

Tensor concat_channels(const Tensor& a, const Tensor& b);

}  // namespace tabnet::model
