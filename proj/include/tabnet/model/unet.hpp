#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabnet/model/layers.hpp"
#include "tabnet/types.hpp"

namespace tabnet::model {

struct NetworkSpec {
  int in_channels = 1;
  int num_classes = 4;
  int base_width = 16;
  int depth = 4;

  bool operator==(const NetworkSpec&) const = default;
};

/// Encoder-decoder with skip connections. Level l has base_width * 2^l
/// channels; the bottleneck sits below `depth` 2x2 max-pools. Output is the
/// per-pixel softmax over num_classes channels at the input resolution.
///
/// One instance holds one parameter set, so every view pushed through it
/// (in one batch or several) shares weights.
class UNet {
 public:
  explicit UNet(const NetworkSpec& spec);
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  const NetworkSpec& spec() const { return spec_; }

  /// Kaiming-normal weights, zero biases, unit norm scales.
  void init(std::uint64_t seed);

  /// N x in_channels x H x W -> N x K x H x W probabilities. H and W must be
  /// divisible by 2^depth. Caches activations for backward.
  Tensor forward(const Tensor& images);

  /// Accumulates parameter gradients from dL/dprobabilities of the last forward.
  void backward(const Tensor& grad_probs);

  std::vector<Parameter*> parameters() { return params_; }
  std::vector<const Parameter*> parameters() const {
    return {params_.begin(), params_.end()};
  }
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  NetworkSpec spec_;
  std::vector<ConvBlock> encoders_;
  std::vector<MaxPool2> pools_;
  ConvBlock bottleneck_;
  std::vector<UpConv2x2> ups_;
  std::vector<ConvBlock> decoders_;
  Conv2d head_;
  std::vector<Parameter*> params_;
  std::vector<int> skip_channels_;
  Tensor probs_;
};

/// Stacks single-channel images into an N x 1 x H x W batch.
Tensor to_batch(std::span<const Image> images);

/// Sample i of a K-channel batch as a ProbMap.
ProbMap<float> sample_probmap(const Tensor& batch, int i);

/// Writes a ProbMap-shaped gradient into sample i of a batch tensor.
void store_sample(Tensor& batch, int i, const Stack<float>& grad);

/// Probability maps for images, evaluated batch_size at a time.
std::vector<ProbMap<float>> predict(UNet& net, std::span<const Image> images, int batch_size = 8);

}  // namespace tabnet::model
