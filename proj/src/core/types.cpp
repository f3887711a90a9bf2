#include "tabnet/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tabnet {

ScribbleMask::ScribbleMask(Plane<int> labels, int num_classes, std::optional<int> ignore_label)
    : labels_(std::move(labels)),
      num_classes_(num_classes),
      ignore_label_(ignore_label.value_or(num_classes)) {
  if (num_classes_ < 1) throw OutOfRange("ScribbleMask: num_classes must be positive");
  if (ignore_label_ >= 0 && ignore_label_ < num_classes_)
    throw OutOfRange("ScribbleMask: ignore_label " + std::to_string(ignore_label_) +
                     " collides with a class index");
  for (int v : labels_.values()) {
    if (v != ignore_label_ && (v < 0 || v >= num_classes_))
      throw OutOfRange("ScribbleMask: label value " + std::to_string(v) + " outside [0, " +
                       std::to_string(num_classes_) + ") and not ignore");
  }
}

std::size_t ScribbleMask::annotated_count() const {
  return static_cast<std::size_t>(std::count_if(labels_.values().begin(), labels_.values().end(),
                                                [&](int v) { return v != ignore_label_; }));
}

HardLabelMap::HardLabelMap(Plane<int> labels, int num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  for (int v : labels_.values()) {
    if (v < 0 || v >= num_classes_)
      throw OutOfRange("HardLabelMap: label value " + std::to_string(v) + " outside [0, " +
                       std::to_string(num_classes_) + ")");
  }
}

JigsawSpec::JigsawSpec(int grid_rows, int grid_cols, std::vector<int> perm)
    : grid_rows_(grid_rows), grid_cols_(grid_cols), perm_(std::move(perm)) {
  if (grid_rows_ < 1 || grid_cols_ < 1) throw OutOfRange("JigsawSpec: grid must be >= 1");
  const int n = grid_rows_ * grid_cols_;
  if (static_cast<int>(perm_.size()) != n)
    throw OutOfRange("JigsawSpec: permutation length " + std::to_string(perm_.size()) +
                     " != " + std::to_string(n));
  inverse_.assign(n, -1);
  for (int p = 0; p < n; ++p) {
    const int src = perm_[p];
    if (src < 0 || src >= n || inverse_[src] != -1)
      throw OutOfRange("JigsawSpec: not a permutation");
    inverse_[src] = p;
  }
}

JigsawSpec JigsawSpec::identity(int grid) {
  std::vector<int> perm(static_cast<std::size_t>(grid) * grid);
  std::iota(perm.begin(), perm.end(), 0);
  return {grid, grid, std::move(perm)};
}

bool JigsawSpec::is_identity() const {
  for (int p = 0; p < patches(); ++p)
    if (perm_[p] != p) return false;
  return true;
}

template <typename T>
void check_normalized(const ProbMap<T>& p, double tol) {
  const std::size_t n = p.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < p.channels(); ++k) {
      const double v = p.channel(k)[i];
      if (!(v >= -tol && v <= 1.0 + tol)) throw OutOfRange("ProbMap entry outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw OutOfRange("ProbMap pixel does not sum to 1");
  }
}

template void check_normalized<float>(const ProbMap<float>&, double);
template void check_normalized<double>(const ProbMap<double>&, double);

}  // namespace tabnet
