#pragma once

#include "tabnet/config.hpp"
#include "tabnet/tas/loss.hpp"
#include "tabnet/types.hpp"

namespace tabnet::bap {

/// Soft erosion: per-channel min over a pool_size x pool_size window,
/// stride 1, edge-replicated padding (equivalently, the window clipped to
/// the image). Throws ConfigError for an even or non-positive pool_size.
template <typename T>
Stack<T> min_pool(const Stack<T>& map, int pool_size = 3);

/// B = max(0, y - min_pool(y)) per channel.
template <typename T>
BoundaryMap<T> extract_boundary(const Stack<T>& map, int pool_size = 3);

/// Vector-Jacobian product of extract_boundary at `map`: maps dL/dB to dL/dy.
/// Pixels where y equals its window minimum contribute nothing.
template <typename T>
Stack<T> extract_boundary_backward(const Stack<T>& map, const Stack<T>& grad_boundary,
                                   int pool_size = 3);

/// One term of the boundary Dice: 1 - (2 sum(B Bpl) + eps) / (sum B + sum Bpl + eps),
/// sums taken jointly over all channels and pixels, or per channel and then
/// averaged (kPerClass). Gradient is w.r.t. B only.
template <typename T>
tas::LossWithGrad<T> boundary_dice_with_grad(const BoundaryMap<T>& boundary,
                                             const BoundaryMap<T>& boundary_pl,
                                             double epsilon = 1e-5,
                                             BoundaryReduction reduction = BoundaryReduction::kJoint);

/// Boundary Dice summed over the jigsaw and intensity branch boundaries.
template <typename T>
T boundary_loss(const BoundaryMap<T>& b_j, const BoundaryMap<T>& b_k,
                const BoundaryMap<T>& b_pl, double epsilon = 1e-5,
                BoundaryReduction reduction = BoundaryReduction::kJoint);

}  // namespace tabnet::bap
