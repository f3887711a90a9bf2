#include "tabnet/model/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace tabnet::model {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXf>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXf>;

void kaiming(std::vector<float>& w, int fan_in, Rng& rng) {
  std::normal_distribution<float> normal(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  for (float& v : w) v = normal(rng);
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      weight_(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
      bias_(name + ".bias", static_cast<std::size_t>(out_channels)) {
  if (kernel % 2 == 0) throw ShapeMismatch("Conv2d: kernel must be odd");
}

void Conv2d::init(Rng& rng) {
  kaiming(weight_.value, in_ * kernel_ * kernel_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

void Conv2d::im2col(const float* src, int h, int w, float* col) const {
  const int pad = kernel_ / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < in_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        float* row = col + (static_cast<std::size_t>(c) * kernel_ * kernel_ + ky * kernel_ + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          float* out = row + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0f);
            continue;
          }
          const float* in = src + (static_cast<std::size_t>(c) * h + sy) * w;
          std::fill(out, out + x0, 0.0f);
          std::copy(in + x0 + dx, in + x1 + dx, out + x0);
          std::fill(out + x1, out + w, 0.0f);
        }
      }
    }
  }
}

void Conv2d::col2im(const float* col, int h, int w, float* dst) const {
  const int pad = kernel_ / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(dst, dst + in_ * hw, 0.0f);
  for (int c = 0; c < in_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const float* row =
            col + (static_cast<std::size_t>(c) * kernel_ * kernel_ + ky * kernel_ + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          float* out = dst + (static_cast<std::size_t>(c) * h + sy) * w;
          const float* in = row + static_cast<std::size_t>(y) * w;
          for (int x = x0; x < x1; ++x) out[x + dx] += in[x];
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c != in_)
    throw ShapeMismatch("Conv2d " + weight_.name + ": expected " + std::to_string(in_) +
                        " channels, got " + x.shape_str());
  input_ = x;
  Tensor y(x.n, out_, x.h, x.w);
  const int hw = x.h * x.w;
  const int rows = in_ * kernel_ * kernel_;
  const ConstMapMat weight(weight_.value.data(), out_, rows);
  const ConstMapVec bias(bias_.value.data(), out_);
  if (kernel_ > 1) col_.resize(static_cast<std::size_t>(rows) * hw);
  for (int i = 0; i < x.n; ++i) {
    const float* col = x.sample(i);
    if (kernel_ > 1) {
      im2col(x.sample(i), x.h, x.w, col_.data());
      col = col_.data();
    }
    MapMat out(y.sample(i), out_, hw);
    out.noalias() = weight * ConstMapMat(col, rows, hw);
    out.colwise() += bias;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const int hw = x.h * x.w;
  const int rows = in_ * kernel_ * kernel_;
  const ConstMapMat weight(weight_.value.data(), out_, rows);
  MapMat grad_w(weight_.grad.data(), out_, rows);
  MapVec grad_b(bias_.grad.data(), out_);
  Tensor grad_in(x.n, x.c, x.h, x.w);
  std::vector<float> grad_col(kernel_ > 1 ? static_cast<std::size_t>(rows) * hw : 0);
  for (int i = 0; i < x.n; ++i) {
    const ConstMapMat dy(grad_out.sample(i), out_, hw);
    const float* col = x.sample(i);
    if (kernel_ > 1) {
      im2col(x.sample(i), x.h, x.w, col_.data());
      col = col_.data();
    }
    grad_w.noalias() += dy * ConstMapMat(col, rows, hw).transpose();
    // plain loop: Eigen's vectorised row sums depend on buffer alignment
    for (int o = 0; o < out_; ++o) {
      const float* row = grad_out.sample(i) + static_cast<std::size_t>(o) * hw;
      float acc = 0.0f;
      for (int p = 0; p < hw; ++p) acc += row[p];
      grad_b[o] += acc;
    }
    if (kernel_ > 1) {
      MapMat(grad_col.data(), rows, hw).noalias() = weight.transpose() * dy;
      col2im(grad_col.data(), x.h, x.w, grad_in.sample(i));
    } else {
      MapMat(grad_in.sample(i), rows, hw).noalias() = weight.transpose() * dy;
    }
  }
  return grad_in;
}

UpConv2x2::UpConv2x2(std::string name, int in_channels, int out_channels)
    : in_(in_channels),
      out_(out_channels),
      weight_(name + ".weight", static_cast<std::size_t>(out_channels) * 4 * in_channels),
      bias_(name + ".bias", static_cast<std::size_t>(out_channels)) {}

void UpConv2x2::init(Rng& rng) {
  kaiming(weight_.value, in_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

Tensor UpConv2x2::forward(const Tensor& x) {
  if (x.c != in_) throw ShapeMismatch("UpConv2x2 " + weight_.name + ": got " + x.shape_str());
  input_ = x;
  const int hw = x.h * x.w;
  Tensor y(x.n, out_, 2 * x.h, 2 * x.w);
  const ConstMapMat weight(weight_.value.data(), out_ * 4, in_);
  RowMat m(out_ * 4, hw);
  for (int i = 0; i < x.n; ++i) {
    m.noalias() = weight * ConstMapMat(x.sample(i), in_, hw);
    for (int o = 0; o < out_; ++o) {
      float* dst = y.channel(i, o);
      const float b = bias_.value[o];
      for (int d = 0; d < 4; ++d) {
        const int dy = d / 2, dx = d % 2;
        const float* src = m.data() + static_cast<std::size_t>(o * 4 + d) * hw;
        for (int r = 0; r < x.h; ++r)
          for (int c = 0; c < x.w; ++c)
            dst[static_cast<std::size_t>(2 * r + dy) * y.w + 2 * c + dx] = src[r * x.w + c] + b;
      }
    }
  }
  return y;
}

Tensor UpConv2x2::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const int hw = x.h * x.w;
  const ConstMapMat weight(weight_.value.data(), out_ * 4, in_);
  MapMat grad_w(weight_.grad.data(), out_ * 4, in_);
  Tensor grad_in(x.n, x.c, x.h, x.w);
  RowMat dm(out_ * 4, hw);
  for (int i = 0; i < x.n; ++i) {
    for (int o = 0; o < out_; ++o) {
      const float* g = grad_out.channel(i, o);
      double bsum = 0.0;
      for (int d = 0; d < 4; ++d) {
        const int dy = d / 2, dx = d % 2;
        float* dst = dm.data() + static_cast<std::size_t>(o * 4 + d) * hw;
        for (int r = 0; r < x.h; ++r) {
          for (int c = 0; c < x.w; ++c) {
            const float v = g[static_cast<std::size_t>(2 * r + dy) * grad_out.w + 2 * c + dx];
            dst[r * x.w + c] = v;
            bsum += v;
          }
        }
      }
      bias_.grad[o] += static_cast<float>(bsum);
    }
    const ConstMapMat xi(x.sample(i), in_, hw);
    grad_w.noalias() += dm * xi.transpose();
    MapMat(grad_in.sample(i), in_, hw).noalias() = weight.transpose() * dm;
  }
  return grad_in;
}

InstanceNorm::InstanceNorm(std::string name, int channels, float eps)
    : channels_(channels),
      eps_(eps),
      gamma_(name + ".gamma", static_cast<std::size_t>(channels)),
      beta_(name + ".beta", static_cast<std::size_t>(channels)) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
}

Tensor InstanceNorm::forward(const Tensor& x) {
  if (x.c != channels_) throw ShapeMismatch("InstanceNorm " + gamma_.name + ": got " + x.shape_str());
  normalized_ = Tensor(x.n, x.c, x.h, x.w);
  inv_std_.assign(static_cast<std::size_t>(x.n) * x.c, 0.0f);
  Tensor y(x.n, x.c, x.h, x.w);
  const std::size_t n = x.plane();
  for (int i = 0; i < x.n; ++i) {
    for (int k = 0; k < x.c; ++k) {
      const float* src = x.channel(i, k);
      double mean = 0.0;
      for (std::size_t p = 0; p < n; ++p) mean += src[p];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t p = 0; p < n; ++p) var += (src[p] - mean) * (src[p] - mean);
      var /= static_cast<double>(n);
      const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
      inv_std_[static_cast<std::size_t>(i) * x.c + k] = inv;
      float* xhat = normalized_.channel(i, k);
      float* dst = y.channel(i, k);
      const float g = gamma_.value[k], b = beta_.value[k];
      const float m = static_cast<float>(mean);
      for (std::size_t p = 0; p < n; ++p) {
        xhat[p] = (src[p] - m) * inv;
        dst[p] = g * xhat[p] + b;
      }
    }
  }
  return y;
}

Tensor InstanceNorm::backward(const Tensor& grad_out) {
  const Tensor& xh = normalized_;
  Tensor grad_in(xh.n, xh.c, xh.h, xh.w);
  const std::size_t n = xh.plane();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int i = 0; i < xh.n; ++i) {
    for (int k = 0; k < xh.c; ++k) {
      const float* dy = grad_out.channel(i, k);
      const float* xhat = xh.channel(i, k);
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        sum_dy += dy[p];
        sum_dy_xhat += static_cast<double>(dy[p]) * xhat[p];
      }
      gamma_.grad[k] += static_cast<float>(sum_dy_xhat);
      beta_.grad[k] += static_cast<float>(sum_dy);
      const float g = gamma_.value[k];
      const float inv = inv_std_[static_cast<std::size_t>(i) * xh.c + k];
      const float mean_dy = static_cast<float>(sum_dy * inv_n);
      const float mean_dy_xhat = static_cast<float>(sum_dy_xhat * inv_n);
      float* dst = grad_in.channel(i, k);
      for (std::size_t p = 0; p < n; ++p)
        dst[p] = g * inv * (dy[p] - mean_dy - xhat[p] * mean_dy_xhat);
    }
  }
  return grad_in;
}

Tensor LeakyRelu::forward(const Tensor& x) {
  input_ = x;
  Tensor y = x;
  for (float& v : y.data)
    if (v < 0.0f) v *= slope_;
  return y;
}

Tensor LeakyRelu::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (input_.data[i] < 0.0f) g.data[i] *= slope_;
  return g;
}

Tensor MaxPool2::forward(const Tensor& x) {
  if (x.h % 2 != 0 || x.w % 2 != 0) throw ShapeMismatch("MaxPool2: odd input " + x.shape_str());
  in_h_ = x.h;
  in_w_ = x.w;
  Tensor y(x.n, x.c, x.h / 2, x.w / 2);
  argmax_.resize(y.size());
  std::size_t o = 0;
  for (int i = 0; i < x.n; ++i) {
    for (int k = 0; k < x.c; ++k) {
      const float* src = x.channel(i, k);
      const std::size_t base = (static_cast<std::size_t>(i) * x.c + k) * x.plane();
      for (int r = 0; r < y.h; ++r) {
        for (int c = 0; c < y.w; ++c, ++o) {
          std::size_t best = static_cast<std::size_t>(2 * r) * x.w + 2 * c;
          for (std::size_t cand : {best + 1, best + x.w, best + x.w + 1})
            if (src[cand] > src[best]) best = cand;
          y.data[o] = src[best];
          argmax_[o] = base + best;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& grad_out) {
  Tensor g(grad_out.n, grad_out.c, in_h_, in_w_);
  for (std::size_t o = 0; o < grad_out.data.size(); ++o) g.data[argmax_[o]] += grad_out.data[o];
  return g;
}

ConvBlock::ConvBlock(const std::string& name, int in_channels, int out_channels)
    : conv1_(name + ".conv1", in_channels, out_channels, 3),
      norm1_(name + ".norm1", out_channels),
      conv2_(name + ".conv2", out_channels, out_channels, 3),
      norm2_(name + ".norm2", out_channels) {}

Tensor ConvBlock::forward(const Tensor& x) {
  return act2_.forward(norm2_.forward(conv2_.forward(act1_.forward(norm1_.forward(conv1_.forward(x))))));
}

Tensor ConvBlock::backward(const Tensor& grad_out) {
  return conv1_.backward(
      norm1_.backward(act1_.backward(conv2_.backward(norm2_.backward(act2_.backward(grad_out))))));
}

void ConvBlock::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

void ConvBlock::collect(std::vector<Parameter*>& out) {
  conv1_.collect(out);
  norm1_.collect(out);
  conv2_.collect(out);
  norm2_.collect(out);
}

Tensor softmax_channels(const Tensor& logits) {
  Tensor p(logits.n, logits.c, logits.h, logits.w);
  const std::size_t plane = logits.plane();
  for (int i = 0; i < logits.n; ++i) {
    for (std::size_t q = 0; q < plane; ++q) {
      float mx = logits.channel(i, 0)[q];
      for (int k = 1; k < logits.c; ++k) mx = std::max(mx, logits.channel(i, k)[q]);
      double z = 0.0;
      for (int k = 0; k < logits.c; ++k) {
        const float e = std::exp(logits.channel(i, k)[q] - mx);
        p.channel(i, k)[q] = e;
        z += e;
      }
      const float inv = static_cast<float>(1.0 / z);
      for (int k = 0; k < logits.c; ++k) p.channel(i, k)[q] *= inv;
    }
  }
  return p;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& grad_probs) {
  Tensor g(probs.n, probs.c, probs.h, probs.w);
  const std::size_t plane = probs.plane();
  for (int i = 0; i < probs.n; ++i) {
    for (std::size_t q = 0; q < plane; ++q) {
      double dot = 0.0;
      for (int k = 0; k < probs.c; ++k)
        dot += static_cast<double>(probs.channel(i, k)[q]) * grad_probs.channel(i, k)[q];
      for (int k = 0; k < probs.c; ++k)
        g.channel(i, k)[q] =
            probs.channel(i, k)[q] * (grad_probs.channel(i, k)[q] - static_cast<float>(dot));
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw ShapeMismatch("concat_channels: " + a.shape_str() + " vs " + b.shape_str());
  Tensor out(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
    std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

}  // namespace tabnet::model
