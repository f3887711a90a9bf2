#include "tabnet/tas/augment.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace tabnet::tas {

CutoutBox infer_cutout_box(const ScribbleMask& scribble, int margin, float fill_value) {
  const auto& labels = scribble.labels();
  int rmin = labels.height(), rmax = -1, cmin = labels.width(), cmax = -1;
  for (int r = 0; r < labels.height(); ++r) {
    for (int c = 0; c < labels.width(); ++c) {
      const int v = labels(r, c);
      if (v < 1 || v >= scribble.num_classes()) continue;
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
  }
  if (rmax < 0) throw NoForeground("infer_cutout_box: scribble has no foreground pixels");
  CutoutBox box;
  box.row_min = std::max(0, rmin - margin);
  box.row_max = std::min(labels.height() - 1, rmax + margin);
  box.col_min = std::max(0, cmin - margin);
  box.col_max = std::min(labels.width() - 1, cmax + margin);
  box.fill_value = fill_value;
  return box;
}

Image apply_cutout(const Image& image, const CutoutBox& box) {
  if (box.row_min < 0 || box.row_min > box.row_max || box.row_max >= image.height() ||
      box.col_min < 0 || box.col_min > box.col_max || box.col_max >= image.width())
    throw OutOfRange("apply_cutout: box outside image bounds");
  Image out = image;
  for (int r = box.row_min; r <= box.row_max; ++r)
    for (int c = box.col_min; c <= box.col_max; ++c) out(r, c) = box.fill_value;
  return out;
}

JigsawSpec sample_jigsaw(int grid, Rng& rng) {
  if (grid < 1) throw OutOfRange("sample_jigsaw: grid must be >= 1");
  std::vector<int> perm(static_cast<std::size_t>(grid) * grid);
  std::iota(perm.begin(), perm.end(), 0);
  // Fisher-Yates; each of n! orders equally likely.
  for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return {grid, grid, std::move(perm)};
}

namespace {

struct PatchGeometry {
  int patch_h;
  int patch_w;
};

PatchGeometry geometry(int height, int width, const JigsawSpec& spec) {
  if (height % spec.grid_rows() != 0 || width % spec.grid_cols() != 0)
    throw ShapeMismatch("jigsaw: " + std::to_string(height) + "x" + std::to_string(width) +
                        " not divisible by grid " + std::to_string(spec.grid_rows()) + "x" +
                        std::to_string(spec.grid_cols()));
  return {height / spec.grid_rows(), width / spec.grid_cols()};
}

// dst patch p <- src patch mapping[p]
template <typename T>
void move_patches(std::span<const T> src, std::span<T> dst, int width, const PatchGeometry& g,
                  const JigsawSpec& spec, const std::vector<int>& mapping) {
  for (int p = 0; p < spec.patches(); ++p) {
    const int q = mapping[p];
    const int dr = (p / spec.grid_cols()) * g.patch_h, dc = (p % spec.grid_cols()) * g.patch_w;
    const int sr = (q / spec.grid_cols()) * g.patch_h, sc = (q % spec.grid_cols()) * g.patch_w;
    for (int r = 0; r < g.patch_h; ++r) {
      const T* from = src.data() + static_cast<std::size_t>(sr + r) * width + sc;
      std::copy(from, from + g.patch_w, dst.data() + static_cast<std::size_t>(dr + r) * width + dc);
    }
  }
}

template <typename T>
Plane<T> permute_plane(const Plane<T>& plane, const JigsawSpec& spec,
                       const std::vector<int>& mapping) {
  const auto g = geometry(plane.height(), plane.width(), spec);
  Plane<T> out(plane.height(), plane.width());
  move_patches<T>(plane.values(), out.values(), plane.width(), g, spec, mapping);
  return out;
}

template <typename T>
Stack<T> permute_stack(const Stack<T>& stack, const JigsawSpec& spec,
                       const std::vector<int>& mapping) {
  const auto g = geometry(stack.height(), stack.width(), spec);
  Stack<T> out(stack.channels(), stack.height(), stack.width());
  for (int k = 0; k < stack.channels(); ++k)
    move_patches<T>(stack.channel(k), out.channel(k), stack.width(), g, spec, mapping);
  return out;
}

}  // namespace

template <typename T>
Plane<T> apply_jigsaw(const Plane<T>& plane, const JigsawSpec& spec) {
  return permute_plane(plane, spec, spec.perm());
}

template <typename T>
Stack<T> apply_jigsaw(const Stack<T>& stack, const JigsawSpec& spec) {
  return permute_stack(stack, spec, spec.perm());
}

template <typename T>
Stack<T> invert_jigsaw(const Stack<T>& stack, const JigsawSpec& spec) {
  return permute_stack(stack, spec, spec.inverse());
}

template <typename T>
Plane<T> invert_jigsaw(const Plane<T>& plane, const JigsawSpec& spec) {
  return permute_plane(plane, spec, spec.inverse());
}

template Plane<float> apply_jigsaw(const Plane<float>&, const JigsawSpec&);
template Plane<int> apply_jigsaw(const Plane<int>&, const JigsawSpec&);
template Plane<double> apply_jigsaw(const Plane<double>&, const JigsawSpec&);
template Stack<float> apply_jigsaw(const Stack<float>&, const JigsawSpec&);
template Stack<double> apply_jigsaw(const Stack<double>&, const JigsawSpec&);
template Stack<float> invert_jigsaw(const Stack<float>&, const JigsawSpec&);
template Stack<double> invert_jigsaw(const Stack<double>&, const JigsawSpec&);
template Plane<float> invert_jigsaw(const Plane<float>&, const JigsawSpec&);
template Plane<int> invert_jigsaw(const Plane<int>&, const JigsawSpec&);

Image apply_intensity(const Image& image, float alpha, float beta) {
  Image out = image;
  for (float& v : out.values()) v = alpha * v + beta;
  return out;
}

IntensityParams sample_intensity(const TrainConfig& cfg, Rng& rng) {
  IntensityParams p;
  p.alpha = static_cast<float>(
      uniform(rng, cfg.intensity_alpha_range.lo, cfg.intensity_alpha_range.hi));
  p.beta = static_cast<float>(
      uniform(rng, cfg.intensity_beta_range.lo, cfg.intensity_beta_range.hi));
  return p;
}

}  // namespace tabnet::tas
