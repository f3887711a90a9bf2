#include "tabnet/bap/dice.hpp"

#include "tabnet/one_hot.hpp"

namespace tabnet::bap {
namespace {

template <typename T>
struct ChannelSums {
  T intersection = 0;
  T pred = 0;
  T target = 0;
};

template <typename T>
ChannelSums<T> channel_sums(const ProbMap<T>& pred, const Stack<T>& target, int k) {
  ChannelSums<T> s;
  const auto p = pred.channel(k);
  const auto t = target.channel(k);
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.intersection += p[i] * t[i];
    s.pred += p[i];
    s.target += t[i];
  }
  return s;
}

}  // namespace

template <typename T>
T dice_loss(const ProbMap<T>& pred, const Stack<T>& target, double epsilon) {
  require_same_shape(pred, target, "dice_loss");
  const int K = pred.channels();
  if (K < 2) throw ShapeMismatch("dice_loss: need at least one foreground channel");
  const T eps = static_cast<T>(epsilon);
  T total = 0;
  for (int k = 1; k < K; ++k) {
    const auto s = channel_sums(pred, target, k);
    total += T(1) - (T(2) * s.intersection + eps) / (s.pred + s.target + eps);
  }
  return total / static_cast<T>(K - 1);
}

template <typename T>
LossWithGrad<T> dice_loss_with_grad(const ProbMap<T>& pred, const Stack<T>& target,
                                    double epsilon) {
  require_same_shape(pred, target, "dice_loss");
  const int K = pred.channels();
  if (K < 2) throw ShapeMismatch("dice_loss: need at least one foreground channel");
  const T eps = static_cast<T>(epsilon);
  const T inv_classes = T(1) / static_cast<T>(K - 1);
  LossWithGrad<T> out{T(0), ProbMap<T>(K, pred.height(), pred.width())};
  for (int k = 1; k < K; ++k) {
    const auto s = channel_sums(pred, target, k);
    const T num = T(2) * s.intersection + eps;
    const T den = s.pred + s.target + eps;
    out.value += T(1) - num / den;
    const auto t = target.channel(k);
    auto g = out.grad.channel(k);
    for (std::size_t i = 0; i < t.size(); ++i)
      g[i] = -inv_classes * (T(2) * t[i] * den - num) / (den * den);
  }
  out.value *= inv_classes;
  return out;
}

template <typename T>
T pl_loss(const ProbMap<T>& y_j, const ProbMap<T>& y_k, const HardLabelMap& y_pl,
          double epsilon) {
  const auto target = one_hot<T>(y_pl);
  return dice_loss(y_j, target, epsilon) + dice_loss(y_k, target, epsilon);
}

template float dice_loss(const ProbMap<float>&, const Stack<float>&, double);
template double dice_loss(const ProbMap<double>&, const Stack<double>&, double);
template LossWithGrad<float> dice_loss_with_grad(const ProbMap<float>&, const Stack<float>&,
                                                 double);
template LossWithGrad<double> dice_loss_with_grad(const ProbMap<double>&, const Stack<double>&,
                                                  double);
template float pl_loss(const ProbMap<float>&, const ProbMap<float>&, const HardLabelMap&, double);
template double pl_loss(const ProbMap<double>&, const ProbMap<double>&, const HardLabelMap&,
                        double);

}  // namespace tabnet::bap
