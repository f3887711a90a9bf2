#include "tabnet/bap/boundary.hpp"

#include <algorithm>
#include <string>

namespace tabnet::bap {
namespace {

void check_pool(int pool_size) {
  if (pool_size < 1 || pool_size % 2 == 0)
    throw ConfigError("boundary pool size must be odd and positive, got " +
                      std::to_string(pool_size));
}

// Index (row-major within the channel) of the first minimum in the clipped window.
template <typename T>
std::size_t window_argmin(std::span<const T> plane, int height, int width, int r, int c,
                          int half) {
  const int r0 = std::max(0, r - half), r1 = std::min(height - 1, r + half);
  const int c0 = std::max(0, c - half), c1 = std::min(width - 1, c + half);
  std::size_t best = static_cast<std::size_t>(r0) * width + c0;
  for (int rr = r0; rr <= r1; ++rr) {
    for (int cc = c0; cc <= c1; ++cc) {
      const std::size_t i = static_cast<std::size_t>(rr) * width + cc;
      if (plane[i] < plane[best]) best = i;
    }
  }
  return best;
}

}  // namespace

template <typename T>
Stack<T> min_pool(const Stack<T>& map, int pool_size) {
  check_pool(pool_size);
  const int half = pool_size / 2;
  Stack<T> out(map.channels(), map.height(), map.width());
  for (int k = 0; k < map.channels(); ++k) {
    const auto in = map.channel(k);
    auto dst = out.channel(k);
    for (int r = 0; r < map.height(); ++r)
      for (int c = 0; c < map.width(); ++c)
        dst[static_cast<std::size_t>(r) * map.width() + c] =
            in[window_argmin(in, map.height(), map.width(), r, c, half)];
  }
  return out;
}

template <typename T>
BoundaryMap<T> extract_boundary(const Stack<T>& map, int pool_size) {
  auto out = min_pool(map, pool_size);
  const auto in = map.values();
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(T(0), in[i] - v[i]);
  return out;
}

template <typename T>
Stack<T> extract_boundary_backward(const Stack<T>& map, const Stack<T>& grad_boundary,
                                   int pool_size) {
  check_pool(pool_size);
  require_same_shape(map, grad_boundary, "extract_boundary_backward");
  const int half = pool_size / 2;
  Stack<T> grad(map.channels(), map.height(), map.width());
  for (int k = 0; k < map.channels(); ++k) {
    const auto in = map.channel(k);
    const auto g = grad_boundary.channel(k);
    auto dst = grad.channel(k);
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < map.width(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * map.width() + c;
        const std::size_t m = window_argmin(in, map.height(), map.width(), r, c, half);
        if (!(in[i] - in[m] > T(0))) continue;
        dst[i] += g[i];
        dst[m] -= g[i];
      }
    }
  }
  return grad;
}

template <typename T>
tas::LossWithGrad<T> boundary_dice_with_grad(const BoundaryMap<T>& boundary,
                                             const BoundaryMap<T>& boundary_pl, double epsilon,
                                             BoundaryReduction reduction) {
  require_same_shape(boundary, boundary_pl, "boundary_loss");
  const T eps = static_cast<T>(epsilon);
  tas::LossWithGrad<T> out{T(0), BoundaryMap<T>(boundary.channels(), boundary.height(),
                                                boundary.width())};
  // One Dice term over a contiguous range of the flattened maps.
  auto term = [&](std::size_t begin, std::size_t end, T grad_scale) {
    const auto b = boundary.values();
    const auto t = boundary_pl.values();
    T inter = 0, sum_b = 0, sum_t = 0;
    for (std::size_t i = begin; i < end; ++i) {
      inter += b[i] * t[i];
      sum_b += b[i];
      sum_t += t[i];
    }
    const T num = T(2) * inter + eps;
    const T den = sum_b + sum_t + eps;
    auto g = out.grad.values();
    for (std::size_t i = begin; i < end; ++i)
      g[i] = -grad_scale * (T(2) * t[i] * den - num) / (den * den);
    return T(1) - num / den;
  };
  if (reduction == BoundaryReduction::kJoint) {
    out.value = term(0, boundary.size(), T(1));
  } else {
    const T scale = T(1) / static_cast<T>(boundary.channels());
    for (int k = 0; k < boundary.channels(); ++k)
      out.value += scale * term(k * boundary.plane_size(), (k + 1) * boundary.plane_size(), scale);
  }
  return out;
}

template <typename T>
T boundary_loss(const BoundaryMap<T>& b_j, const BoundaryMap<T>& b_k, const BoundaryMap<T>& b_pl,
                double epsilon, BoundaryReduction reduction) {
  return boundary_dice_with_grad(b_j, b_pl, epsilon, reduction).value +
         boundary_dice_with_grad(b_k, b_pl, epsilon, reduction).value;
}

#define TABNET_INSTANTIATE(T)                                                                   \
  template Stack<T> min_pool(const Stack<T>&, int);                                             \
  template BoundaryMap<T> extract_boundary(const Stack<T>&, int);                               \
  template Stack<T> extract_boundary_backward(const Stack<T>&, const Stack<T>&, int);           \
  template tas::LossWithGrad<T> boundary_dice_with_grad(const BoundaryMap<T>&,                  \
                                                        const BoundaryMap<T>&, double,          \
                                                        BoundaryReduction);                     \
  template T boundary_loss(const BoundaryMap<T>&, const BoundaryMap<T>&, const BoundaryMap<T>&, \
                           double, BoundaryReduction);
TABNET_INSTANTIATE(float)
TABNET_INSTANTIATE(double)
#undef TABNET_INSTANTIATE

}  // namespace tabnet::bap
