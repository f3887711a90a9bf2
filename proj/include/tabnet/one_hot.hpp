#pragma once

#include <optional>

#include "tabnet/types.hpp"

namespace tabnet {

/// Binary K x H x W expansion. Pixels equal to ignore_label are all-zero
/// across channels; any other value outside [0, K) throws OutOfRange.
template <typename T>
Stack<T> one_hot(const Plane<int>& labels, int num_classes,
                 std::optional<int> ignore_label = std::nullopt);

template <typename T>
Stack<T> one_hot(const HardLabelMap& labels) {
  return one_hot<T>(labels.labels(), labels.num_classes());
}

template <typename T>
Stack<T> one_hot(const ScribbleMask& mask) {
  return one_hot<T>(mask.labels(), mask.num_classes(), mask.ignore_label());
}

/// Per-pixel argmax over channels; ties go to the lowest index.
template <typename T>
HardLabelMap argmax(const Stack<T>& scores);

}  // namespace tabnet
