#include "tabnet/one_hot.hpp"

#include <string>

namespace tabnet {

template <typename T>
Stack<T> one_hot(const Plane<int>& labels, int num_classes, std::optional<int> ignore_label) {
  if (num_classes < 1) throw OutOfRange("one_hot: num_classes must be positive");
  Stack<T> out(num_classes, labels.height(), labels.width());
  for (int r = 0; r < labels.height(); ++r) {
    for (int c = 0; c < labels.width(); ++c) {
      const int v = labels(r, c);
      if (ignore_label && v == *ignore_label) continue;
      if (v < 0 || v >= num_classes)
        throw OutOfRange("one_hot: label " + std::to_string(v) + " outside [0, " +
                         std::to_string(num_classes) + ")");
      out(v, r, c) = T(1);
    }
  }
  return out;
}

template <typename T>
HardLabelMap argmax(const Stack<T>& scores) {
  Plane<int> labels(scores.height(), scores.width());
  for (int r = 0; r < scores.height(); ++r) {
    for (int c = 0; c < scores.width(); ++c) {
      int best = 0;
      for (int k = 1; k < scores.channels(); ++k)
        if (scores(k, r, c) > scores(best, r, c)) best = k;
      labels(r, c) = best;
    }
  }
  return {std::move(labels), scores.channels()};
}

template Stack<float> one_hot<float>(const Plane<int>&, int, std::optional<int>);
template Stack<double> one_hot<double>(const Plane<int>&, int, std::optional<int>);
template HardLabelMap argmax<float>(const Stack<float>&);
template HardLabelMap argmax<double>(const Stack<double>&);

}  // namespace tabnet
