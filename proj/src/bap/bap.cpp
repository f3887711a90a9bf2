#include "tabnet/bap/bap.hpp"

#include "tabnet/one_hot.hpp"
#include "tabnet/tas/loss.hpp"

namespace tabnet::bap {

template <typename T>
Supervision<T> supervise(std::span<const ProbMap<T>* const> preds, const HardLabelMap& y_pl,
                         const BapOptions& opts) {
  const auto target = one_hot<T>(y_pl);
  const auto target_boundary = extract_boundary(target, opts.pool_size);
  Supervision<T> out;
  for (const auto* pred : preds) {
    auto dice = dice_loss_with_grad(*pred, target, opts.epsilon);
    out.pl_loss += dice.value;
    out.grads_pl.push_back(std::move(dice.grad));

    const auto boundary = extract_boundary(*pred, opts.pool_size);
    auto bd = boundary_dice_with_grad(boundary, target_boundary, opts.epsilon,
                                      opts.boundary_reduction);
    out.boundary_loss += bd.value;
    out.grads_bd.push_back(extract_boundary_backward(*pred, bd.grad, opts.pool_size));
  }
  return out;
}

template <typename T>
BapResult<T> bap_forward(std::span<const ProbMap<T>* const> preds,
                         std::span<const double> ce_losses, const BapOptions& opts) {
  if (preds.size() != ce_losses.size())
    throw ShapeMismatch("bap_forward: one cross-entropy value per branch required");
  BapResult<T> out;
  out.weights = branch_weights(ce_losses, opts.fusion, opts.rng);
  out.pseudo_label = fuse_pseudo_label<T>(preds, out.weights);
  static_cast<Supervision<T>&>(out) = supervise<T>(preds, out.pseudo_label, opts);
  return out;
}

template <typename T>
BapResult<T> bap_forward(const ProbMap<T>& y_j, const ProbMap<T>& y_k,
                         const ScribbleMask& scribble, const BapOptions& opts,
                         std::optional<std::pair<double, double>> ce_losses) {
  if (!ce_losses) {
    ce_losses = std::pair<double, double>{
        static_cast<double>(tas::partial_cross_entropy(y_j, scribble, opts.ce_reduction)),
        static_cast<double>(tas::partial_cross_entropy(y_k, scribble, opts.ce_reduction))};
  }
  const ProbMap<T>* preds[] = {&y_j, &y_k};
  const double ce[] = {ce_losses->first, ce_losses->second};
  return bap_forward<T>(preds, ce, opts);
}

#define TABNET_INSTANTIATE(T)                                                                  \
  template Supervision<T> supervise(std::span<const ProbMap<T>* const>, const HardLabelMap&,   \
                                    const BapOptions&);                                        \
  template BapResult<T> bap_forward(std::span<const ProbMap<T>* const>, std::span<const double>, \
                                    const BapOptions&);                                        \
  template BapResult<T> bap_forward(const ProbMap<T>&, const ProbMap<T>&, const ScribbleMask&, \
                                    const BapOptions&,                                         \
                                    std::optional<std::pair<double, double>>);
TABNET_INSTANTIATE(float)
TABNET_INSTANTIATE(double)
#undef TABNET_INSTANTIATE

}  // namespace tabnet::bap
