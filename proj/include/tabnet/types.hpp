#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tabnet/array.hpp"

namespace tabnet {

/// Single-channel intensity slice.
using Image = Plane<float>;

/// K x H x W per-pixel class probabilities (softmax-normalized), or a
/// gradient with the same layout.
template <typename T>
using ProbMap = Stack<T>;

/// K x H x W soft boundary field, entries in [0, 1].
template <typename T>
using BoundaryMap = Stack<T>;

inline constexpr int kDefaultNumClasses = 4;  // background, RV, Myo, LV

/// Sparse per-pixel labels. Pixels equal to ignore_label are unannotated.
class ScribbleMask {
 public:
  ScribbleMask() = default;
  /// ignore_label defaults to num_classes.
  ScribbleMask(Plane<int> labels, int num_classes, std::optional<int> ignore_label = std::nullopt);

  const Plane<int>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  int ignore_label() const { return ignore_label_; }
  int height() const { return labels_.height(); }
  int width() const { return labels_.width(); }

  bool annotated(int r, int c) const { return labels_(r, c) != ignore_label_; }
  std::size_t annotated_count() const;

 private:
  Plane<int> labels_;
  int num_classes_ = kDefaultNumClasses;
  int ignore_label_ = kDefaultNumClasses;
};

/// Dense label map with every entry in [0, K).
class HardLabelMap {
 public:
  HardLabelMap() = default;
  HardLabelMap(Plane<int> labels, int num_classes);

  const Plane<int>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  int height() const { return labels_.height(); }
  int width() const { return labels_.width(); }
  int operator()(int r, int c) const { return labels_(r, c); }

  bool operator==(const HardLabelMap&) const = default;

 private:
  Plane<int> labels_;
  int num_classes_ = kDefaultNumClasses;
};

/// Grid geometry plus a patch permutation. Output patch p of the jigsaw
/// is taken from input patch perm[p].
class JigsawSpec {
 public:
  JigsawSpec() : JigsawSpec(1, 1, {0}) {}
  JigsawSpec(int grid_rows, int grid_cols, std::vector<int> perm);

  static JigsawSpec identity(int grid);

  int grid_rows() const { return grid_rows_; }
  int grid_cols() const { return grid_cols_; }
  int patches() const { return grid_rows_ * grid_cols_; }
  const std::vector<int>& perm() const { return perm_; }
  const std::vector<int>& inverse() const { return inverse_; }
  bool is_identity() const;

  bool operator==(const JigsawSpec& o) const {
    return grid_rows_ == o.grid_rows_ && grid_cols_ == o.grid_cols_ && perm_ == o.perm_;
  }

 private:
  int grid_rows_;
  int grid_cols_;
  std::vector<int> perm_;
  std::vector<int> inverse_;
};

/// Inclusive pixel rectangle to be overwritten with fill_value.
struct CutoutBox {
  int row_min = 0;
  int row_max = 0;
  int col_min = 0;
  int col_max = 0;
  float fill_value = 0.0f;

  bool contains(int r, int c) const {
    return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
  }
  bool operator==(const CutoutBox&) const = default;
};

/// Per-branch pseudo-label fusion weights; sum to 1.
struct FusionWeights {
  double w_j = 0.5;
  double w_k = 0.5;
};

/// Throws unless every pixel's channel sum is within tol of 1 and entries lie in [0, 1].
template <typename T>
void check_normalized(const ProbMap<T>& p, double tol = 1e-5);

}  // namespace tabnet
