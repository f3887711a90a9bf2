#pragma once

#include "tabnet/config.hpp"
#include "tabnet/rng.hpp"
#include "tabnet/types.hpp"

namespace tabnet::tas {

/// Tight box around all foreground scribble pixels (classes 1..K-1), grown
/// by margin and clamped to the image. Throws NoForeground if there are none.
CutoutBox infer_cutout_box(const ScribbleMask& scribble, int margin, float fill_value = 0.0f);

/// Copy of image with the box overwritten by box.fill_value.
Image apply_cutout(const Image& image, const CutoutBox& box);

/// Uniform permutation of grid*grid patches.
JigsawSpec sample_jigsaw(int grid, Rng& rng);

/// Output patch p is input patch spec.perm()[p]. Throws ShapeMismatch when
/// the plane does not divide evenly into the grid.
template <typename T>
Plane<T> apply_jigsaw(const Plane<T>& plane, const JigsawSpec& spec);

/// Channel-wise apply_jigsaw.
template <typename T>
Stack<T> apply_jigsaw(const Stack<T>& stack, const JigsawSpec& spec);

/// Exact inverse of apply_jigsaw: invert_jigsaw(apply_jigsaw(y, s), s) == y.
/// Also the adjoint of apply_jigsaw, so it maps gradients back the other way.
template <typename T>
Stack<T> invert_jigsaw(const Stack<T>& stack, const JigsawSpec& spec);

template <typename T>
Plane<T> invert_jigsaw(const Plane<T>& plane, const JigsawSpec& spec);

/// alpha * x + beta, no clipping.
Image apply_intensity(const Image& image, float alpha, float beta);

struct IntensityParams {
  float alpha = 1.0f;
  float beta = 0.0f;
};

IntensityParams sample_intensity(const TrainConfig& cfg, Rng& rng);

}  // namespace tabnet::tas
