#pragma once

#include "tabnet/tas/loss.hpp"
#include "tabnet/types.hpp"

namespace tabnet::bap {

using tas::LossWithGrad;

/// Soft Dice loss averaged over foreground channels 1..K-1:
/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps) per channel.
/// Channel 0 (background) receives zero gradient.
template <typename T>
T dice_loss(const ProbMap<T>& pred, const Stack<T>& target, double epsilon = 1e-5);

template <typename T>
LossWithGrad<T> dice_loss_with_grad(const ProbMap<T>& pred, const Stack<T>& target,
                                    double epsilon = 1e-5);

/// dice(y_j, onehot(y_pl)) + dice(y_k, onehot(y_pl)); y_pl is a constant.
template <typename T>
T pl_loss(const ProbMap<T>& y_j, const ProbMap<T>& y_k, const HardLabelMap& y_pl,
          double epsilon = 1e-5);

}  // namespace tabnet::bap
