#include "tabnet/bap/fusion.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace tabnet::bap {

namespace {
constexpr double kDegenerateLossSum = 1e-12;
}

FusionWeights fusion_weights(double loss_j, double loss_k) {
  if (!(loss_j >= 0.0) || !(loss_k >= 0.0))
    throw OutOfRange("fusion_weights: losses must be non-negative and finite");
  const double sum = loss_j + loss_k;
  if (sum < kDegenerateLossSum) return {0.5, 0.5};
  return {loss_k / sum, loss_j / sum};
}

std::vector<double> branch_weights(std::span<const double> losses, FusionStrategy strategy,
                                   Rng* rng) {
  const std::size_t n = losses.size();
  if (n == 0) throw OutOfRange("branch_weights: no branches");
  for (double l : losses)
    if (!(l >= 0.0)) throw OutOfRange("branch_weights: losses must be non-negative and finite");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (n == 1) return w;
  switch (strategy) {
    case FusionStrategy::kAverage:
      return w;
    case FusionStrategy::kLossWeighted: {
      if (n == 2) {
        const auto fw = fusion_weights(losses[0], losses[1]);
        return {fw.w_j, fw.w_k};
      }
      const double sum = std::accumulate(losses.begin(), losses.end(), 0.0);
      if (sum < kDegenerateLossSum) return w;
      for (std::size_t b = 0; b < n; ++b)
        w[b] = (sum - losses[b]) / (static_cast<double>(n - 1) * sum);
      return w;
    }
    case FusionStrategy::kRandom: {
      if (rng == nullptr) throw OutOfRange("branch_weights: random fusion needs an rng");
      double sum = 0.0;
      for (auto& v : w) sum += (v = uniform(*rng, 0.0, 1.0));
      if (sum <= 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));
      for (auto& v : w) v /= sum;
      return w;
    }
  }
  return w;
}

template <typename T>
HardLabelMap fuse_pseudo_label(std::span<const ProbMap<T>* const> preds,
                               std::span<const double> weights) {
  if (preds.empty() || preds.size() != weights.size())
    throw ShapeMismatch("fuse_pseudo_label: need one weight per prediction");
  const auto& first = *preds[0];
  for (const auto* p : preds) require_same_shape(first, *p, "fuse_pseudo_label");
  const int K = first.channels();
  Plane<int> labels(first.height(), first.width());
  std::vector<double> score(static_cast<std::size_t>(K));
  for (int r = 0; r < first.height(); ++r) {
    for (int c = 0; c < first.width(); ++c) {
      for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < preds.size(); ++b)
          s += weights[b] * static_cast<double>((*preds[b])(k, r, c));
        score[k] = s;
      }
      int best = 0;
      for (int k = 1; k < K; ++k)
        if (score[k] > score[best]) best = k;
      labels(r, c) = best;
    }
  }
  return {std::move(labels), K};
}

template <typename T>
HardLabelMap fuse_pseudo_label(const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                               const FusionWeights& w) {
  const ProbMap<T>* preds[] = {&y_j, &y_k};
  const double weights[] = {w.w_j, w.w_k};
  return fuse_pseudo_label<T>(preds, weights);
}

template HardLabelMap fuse_pseudo_label(const ProbMap<float>&, const ProbMap<float>&,
                                        const FusionWeights&);
template HardLabelMap fuse_pseudo_label(const ProbMap<double>&, const ProbMap<double>&,
                                        const FusionWeights&);
template HardLabelMap fuse_pseudo_label(std::span<const ProbMap<float>* const>,
                                        std::span<const double>);
template HardLabelMap fuse_pseudo_label(std::span<const ProbMap<double>* const>,
                                        std::span<const double>);

}  // namespace tabnet::bap
