#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tabnet/bap/boundary.hpp"
#include "tabnet/bap/dice.hpp"
#include "tabnet/bap/fusion.hpp"

namespace tabnet::bap {

struct BapOptions {
  double epsilon = 1e-5;
  int pool_size = 3;
  BoundaryReduction boundary_reduction = BoundaryReduction::kJoint;
  FusionStrategy fusion = FusionStrategy::kLossWeighted;
  CeReduction ce_reduction = CeReduction::kMean;
  Rng* rng = nullptr;  // kRandom only

  static BapOptions from(const TrainConfig& cfg, Rng* rng = nullptr) {
    return {cfg.epsilon, cfg.pool_size(), cfg.boundary_reduction, cfg.pl_fusion, cfg.ce_reduction,
            rng};
  }
};

/// Region and boundary supervision of a set of branch predictions by a
/// fixed pseudo-label. grads_* hold d(loss)/d(prediction) per branch; the
/// pseudo-label and its boundary map are constants.
template <typename T>
struct Supervision {
  T pl_loss{};
  T boundary_loss{};
  std::vector<ProbMap<T>> grads_pl;
  std::vector<ProbMap<T>> grads_bd;
};

template <typename T>
Supervision<T> supervise(std::span<const ProbMap<T>* const> preds, const HardLabelMap& y_pl,
                         const BapOptions& opts);

template <typename T>
struct BapResult : Supervision<T> {
  HardLabelMap pseudo_label;
  std::vector<double> weights;
};

/// Fuses branch predictions into a hard pseudo-label using weights derived
/// from each branch's (detached) scribble cross-entropy, then supervises
/// every branch with it. No gradient flows through the weights, the label
/// or its boundary.
template <typename T>
BapResult<T> bap_forward(std::span<const ProbMap<T>* const> preds,
                         std::span<const double> ce_losses, const BapOptions& opts);

/// Two-branch form on the jigsaw (already re-assembled) and intensity
/// predictions. Cross-entropies are computed here unless supplied.
template <typename T>
BapResult<T> bap_forward(const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                         const ScribbleMask& scribble, const BapOptions& opts = {},
                         std::optional<std::pair<double, double>> ce_losses = std::nullopt);

}  // namespace tabnet::bap
