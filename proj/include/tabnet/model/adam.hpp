#pragma once

#include <cstdint>
#include <vector>

#include "tabnet/model/tensor.hpp"

namespace tabnet::model {

class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  /// One bias-corrected update with the given learning rate.
  void step(double lr);

  std::uint64_t steps() const { return step_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }
  const std::vector<Parameter*>& params() const { return params_; }

  /// Used when resuming from a checkpoint. Sizes must match the parameters.
  void restore(std::uint64_t steps, std::vector<std::vector<float>> m,
               std::vector<std::vector<float>> v);

 private:
  std::vector<Parameter*> params_;
  double beta1_, beta2_, eps_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace tabnet::model
