#pragma once

// Brute-force reference computations used by the tests and `tabnet selftest`.
// Nothing here calls into the library routines it is used to check.

#include <functional>
#include <vector>

#include "tabnet/rng.hpp"
#include "tabnet/types.hpp"

namespace tabnet::oracle {

/// Random ProbMap: softmax of Gaussian logits with the given scale.
template <typename T>
ProbMap<T> random_probmap(int K, int H, int W, Rng& rng, double logit_scale = 1.0);

/// Random scribble: each pixel annotated with probability `density`.
ScribbleMask random_scribble(int K, int H, int W, Rng& rng, double density = 0.2);

Plane<int> random_binary(int H, int W, Rng& rng, double density = 0.5);

/// Per-pixel scalar loop of argmax_c sum_b w_b * preds[b][c].
HardLabelMap fuse_loop(const std::vector<const ProbMap<float>*>& preds,
                       const std::vector<double>& weights);

/// Binary erosion with an explicitly replicate-padded copy of the mask.
Plane<int> binary_erosion(const Plane<int>& mask, int pool_size = 3);

/// Boundary Dice term evaluated as a plain loop with joint sums.
double boundary_dice_loop(const Stack<double>& b, const Stack<double>& b_pl, double eps);

/// -log p averaged over annotated pixels, looping over channels explicitly.
double partial_ce_loop(const ProbMap<double>& pred, const ScribbleMask& s);

/// Central finite-difference gradient of f at x.
std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h = 1e-6);

/// Max over entries of |a - b| / max(|a|, |b|, floor).
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-6);

}  // namespace tabnet::oracle
