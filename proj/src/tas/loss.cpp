#include "tabnet/tas/loss.hpp"

#include <algorithm>
#include <cmath>

namespace tabnet::tas {
namespace {

void check_shapes(const auto& pred, const ScribbleMask& scribble) {
  if (pred.height() != scribble.height() || pred.width() != scribble.width() ||
      pred.channels() != scribble.num_classes())
    throw ShapeMismatch("partial_cross_entropy: prediction and scribble shapes differ");
}

}  // namespace

template <typename T>
T partial_cross_entropy(const ProbMap<T>& pred, const ScribbleMask& scribble,
                        CeReduction reduction) {
  check_shapes(pred, scribble);
  const auto& labels = scribble.labels();
  T sum = 0;
  std::size_t count = 0;
  for (int r = 0; r < labels.height(); ++r) {
    for (int c = 0; c < labels.width(); ++c) {
      if (!scribble.annotated(r, c)) continue;
      sum -= std::log(std::max(pred(labels(r, c), r, c), static_cast<T>(kLogClamp)));
      ++count;
    }
  }
  if (count == 0) return T(0);
  return reduction == CeReduction::kMean ? sum / static_cast<T>(count) : sum;
}

template <typename T>
LossWithGrad<T> partial_cross_entropy_with_grad(const ProbMap<T>& pred,
                                                const ScribbleMask& scribble,
                                                CeReduction reduction) {
  check_shapes(pred, scribble);
  LossWithGrad<T> out{T(0), ProbMap<T>(pred.channels(), pred.height(), pred.width())};
  const std::size_t count = scribble.annotated_count();
  if (count == 0) return out;
  const T scale = reduction == CeReduction::kMean ? T(1) / static_cast<T>(count) : T(1);
  const auto& labels = scribble.labels();
  const T clamp = static_cast<T>(kLogClamp);
  T sum = 0;
  for (int r = 0; r < labels.height(); ++r) {
    for (int c = 0; c < labels.width(); ++c) {
      if (!scribble.annotated(r, c)) continue;
      const int k = labels(r, c);
      const T p = pred(k, r, c);
      if (p > clamp) {
        sum -= std::log(p);
        out.grad(k, r, c) = -scale / p;
      } else {
        sum -= std::log(clamp);
      }
    }
  }
  out.value = sum * scale;
  return out;
}

template <typename T>
TasTerms<T> tas_loss(const ProbMap<T>& y_i, const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                     const ScribbleMask& scribble, CeReduction reduction) {
  return {partial_cross_entropy(y_i, scribble, reduction),
          partial_cross_entropy(y_j, scribble, reduction),
          partial_cross_entropy(y_k, scribble, reduction)};
}

template float partial_cross_entropy(const ProbMap<float>&, const ScribbleMask&, CeReduction);
template double partial_cross_entropy(const ProbMap<double>&, const ScribbleMask&, CeReduction);
template LossWithGrad<float> partial_cross_entropy_with_grad(const ProbMap<float>&,
                                                             const ScribbleMask&, CeReduction);
template LossWithGrad<double> partial_cross_entropy_with_grad(const ProbMap<double>&,
                                                              const ScribbleMask&, CeReduction);
template TasTerms<float> tas_loss(const ProbMap<float>&, const ProbMap<float>&,
                                  const ProbMap<float>&, const ScribbleMask&, CeReduction);
template TasTerms<double> tas_loss(const ProbMap<double>&, const ProbMap<double>&,
                                   const ProbMap<double>&, const ScribbleMask&, CeReduction);

}  // namespace tabnet::tas
