#pragma once

#include "tabnet/config.hpp"
#include "tabnet/types.hpp"

namespace tabnet::tas {

/// Scalar loss together with its gradient w.r.t. the probability map it
/// was computed from.
template <typename T>
struct LossWithGrad {
  T value{};
  ProbMap<T> grad;
};

/// Probabilities are clamped here before the log.
inline constexpr double kLogClamp = 1e-12;

/// Cross-entropy restricted to annotated pixels: -log pred[label] averaged
/// (or summed) over the scribble. Zero when nothing is annotated. Values of
/// pred at ignored pixels never matter.
template <typename T>
T partial_cross_entropy(const ProbMap<T>& pred, const ScribbleMask& scribble,
                        CeReduction reduction = CeReduction::kMean);

template <typename T>
LossWithGrad<T> partial_cross_entropy_with_grad(const ProbMap<T>& pred,
                                                const ScribbleMask& scribble,
                                                CeReduction reduction = CeReduction::kMean);

/// Triplet loss of the cutout (i), jigsaw (j) and intensity (k) branches.
/// All three maps must already be in the original image frame; y_i is
/// scored on every scribble pixel, including those hidden by the cutout.
template <typename T>
struct TasTerms {
  T ce_i{};
  T ce_j{};
  T ce_k{};
  T total() const { return ce_i + ce_j + ce_k; }
};

template <typename T>
TasTerms<T> tas_loss(const ProbMap<T>& y_i, const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                     const ScribbleMask& scribble, CeReduction reduction = CeReduction::kMean);

}  // namespace tabnet::tas
