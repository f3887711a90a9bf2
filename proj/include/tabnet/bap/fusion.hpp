#pragma once

#include <span>
#include <vector>

#include "tabnet/config.hpp"
#include "tabnet/rng.hpp"
#include "tabnet/types.hpp"

namespace tabnet::bap {

/// Loss-derived fusion weights for the jigsaw (j) and intensity (k) branches.
///
/// Cross-weighted: w_j = loss_k / (loss_j + loss_k) and w_k = loss_j / (loss_j + loss_k),
/// so the branch with the smaller cross-entropy gets the larger weight.
/// Both losses below 1e-12 in total gives (0.5, 0.5). Negative input throws.
FusionWeights fusion_weights(double loss_j, double loss_k);

/// N-branch weights. kLossWeighted gives w_b = (S - L_b) / ((N - 1) S) with
/// S the loss sum, which reduces to fusion_weights for N = 2; kAverage gives
/// 1/N; kRandom draws uniform values and normalizes (rng required).
std::vector<double> branch_weights(std::span<const double> losses, FusionStrategy strategy,
                                   Rng* rng = nullptr);

/// argmax_c (w_j * y_j[c] + w_k * y_k[c]); ties to the lowest class.
template <typename T>
HardLabelMap fuse_pseudo_label(const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                               const FusionWeights& w);

template <typename T>
HardLabelMap fuse_pseudo_label(std::span<const ProbMap<T>* const> preds,
                               std::span<const double> weights);

}  // namespace tabnet::bap
