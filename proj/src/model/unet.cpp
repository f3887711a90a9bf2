#include "tabnet/model/unet.hpp"

#include <algorithm>
#include <string>

namespace tabnet::model {
namespace {

std::vector<ConvBlock> make_encoders(const NetworkSpec& s) {
  std::vector<ConvBlock> out;
  for (int l = 0; l < s.depth; ++l)
    out.emplace_back("enc" + std::to_string(l), l == 0 ? s.in_channels : s.base_width << (l - 1),
                     s.base_width << l);
  return out;
}

std::vector<UpConv2x2> make_ups(const NetworkSpec& s) {
  std::vector<UpConv2x2> out;
  for (int l = 0; l < s.depth; ++l)
    out.emplace_back("up" + std::to_string(l), s.base_width << (l + 1), s.base_width << l);
  return out;
}

std::vector<ConvBlock> make_decoders(const NetworkSpec& s) {
  std::vector<ConvBlock> out;
  for (int l = 0; l < s.depth; ++l)
    out.emplace_back("dec" + std::to_string(l), 2 * (s.base_width << l), s.base_width << l);
  return out;
}

}  // namespace

UNet::UNet(const NetworkSpec& spec)
    : spec_(spec),
      encoders_(make_encoders(spec)),
      pools_(static_cast<std::size_t>(spec.depth)),
      bottleneck_("bottleneck", spec.base_width << (spec.depth - 1), spec.base_width << spec.depth),
      ups_(make_ups(spec)),
      decoders_(make_decoders(spec)),
      head_("head", spec.base_width, spec.num_classes, 1) {
  if (spec.in_channels < 1 || spec.num_classes < 2 || spec.base_width < 1 || spec.depth < 1)
    throw ShapeMismatch("UNet: invalid network spec");
  for (auto& e : encoders_) e.collect(params_);
  bottleneck_.collect(params_);
  for (int l = spec.depth - 1; l >= 0; --l) {
    ups_[l].collect(params_);
    decoders_[l].collect(params_);
  }
  head_.collect(params_);
}

void UNet::init(std::uint64_t seed) {
  auto rng = make_rng(seed, {0x6e6574});
  for (auto& e : encoders_) e.init(rng);
  bottleneck_.init(rng);
  for (int l = spec_.depth - 1; l >= 0; --l) {
    ups_[l].init(rng);
    decoders_[l].init(rng);
  }
  head_.init(rng);
}

Tensor UNet::forward(const Tensor& images) {
  const int factor = 1 << spec_.depth;
  if (images.c != spec_.in_channels)
    throw ShapeMismatch("UNet: expected " + std::to_string(spec_.in_channels) +
                        " input channels, got " + images.shape_str());
  if (images.h % factor != 0 || images.w % factor != 0)
    throw ShapeMismatch("UNet: spatial size " + std::to_string(images.h) + "x" +
                        std::to_string(images.w) + " not divisible by " + std::to_string(factor));
  std::vector<Tensor> skips;
  skips.reserve(spec_.depth);
  skip_channels_.clear();
  Tensor x = images;
  for (int l = 0; l < spec_.depth; ++l) {
    skips.push_back(encoders_[l].forward(x));
    skip_channels_.push_back(skips.back().c);
    x = pools_[l].forward(skips.back());
  }
  x = bottleneck_.forward(x);
  for (int l = spec_.depth - 1; l >= 0; --l)
    x = decoders_[l].forward(concat_channels(skips[l], ups_[l].forward(x)));
  probs_ = softmax_channels(head_.forward(x));
  return probs_;
}

void UNet::backward(const Tensor& grad_probs) {
  if (!grad_probs.same_shape(probs_)) throw ShapeMismatch("UNet::backward: gradient shape");
  Tensor g = head_.backward(softmax_backward(probs_, grad_probs));
  // Gradient reaching each skip connection from the decoder side.
  std::vector<Tensor> skip_grads(static_cast<std::size_t>(spec_.depth));
  for (int l = 0; l < spec_.depth; ++l) {
    Tensor cat = decoders_[l].backward(g);
    const int cs = skip_channels_[l];
    Tensor skip(cat.n, cs, cat.h, cat.w), up(cat.n, cat.c - cs, cat.h, cat.w);
    for (int i = 0; i < cat.n; ++i) {
      std::copy(cat.sample(i), cat.sample(i) + skip.sample_size(), skip.sample(i));
      std::copy(cat.sample(i) + skip.sample_size(), cat.sample(i) + cat.sample_size(), up.sample(i));
    }
    skip_grads[l] = std::move(skip);
    g = ups_[l].backward(up);  // now w.r.t. the output of decoder l + 1 (or the bottleneck)
  }
  g = bottleneck_.backward(g);
  for (int l = spec_.depth - 1; l >= 0; --l) {
    g = pools_[l].backward(g);
    for (std::size_t q = 0; q < g.data.size(); ++q) g.data[q] += skip_grads[l].data[q];
    g = encoders_[l].backward(g);
  }
}

std::size_t UNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params_) n += p->value.size();
  return n;
}

void UNet::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

Tensor to_batch(std::span<const Image> images) {
  if (images.empty()) return {};
  const int h = images[0].height(), w = images[0].width();
  Tensor t(static_cast<int>(images.size()), 1, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w)
      throw ShapeMismatch("to_batch: images differ in size");
    std::copy(images[i].values().begin(), images[i].values().end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

ProbMap<float> sample_probmap(const Tensor& batch, int i) {
  ProbMap<float> p(batch.c, batch.h, batch.w);
  std::copy(batch.sample(i), batch.sample(i) + batch.sample_size(), p.values().begin());
  return p;
}

void store_sample(Tensor& batch, int i, const Stack<float>& grad) {
  if (grad.channels() != batch.c || grad.height() != batch.h || grad.width() != batch.w)
    throw ShapeMismatch("store_sample: shape mismatch");
  std::copy(grad.values().begin(), grad.values().end(), batch.sample(i));
}

std::vector<ProbMap<float>> predict(UNet& net, std::span<const Image> images, int batch_size) {
  std::vector<ProbMap<float>> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const auto count = std::min<std::size_t>(batch_size, images.size() - start);
    const Tensor probs = net.forward(to_batch(images.subspan(start, count)));
    for (int i = 0; i < probs.n; ++i) out.push_back(sample_probmap(probs, i));
  }
  return out;
}

}  // namespace tabnet::model
