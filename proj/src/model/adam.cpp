#include "tabnet/model/adam.hpp"

#include <cmath>

namespace tabnet::model {

Adam::Adam(std::vector<Parameter*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step(double lr) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const float step_size = static_cast<float>(lr / c1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& value = params_[i]->value;
    const auto& grad = params_[i]->grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * grad[j];
      v[j] = b2 * v[j] + (1.0f - b2) * grad[j] * grad[j];
      value[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

void Adam::restore(std::uint64_t steps, std::vector<std::vector<float>> m,
                   std::vector<std::vector<float>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw ShapeMismatch("Adam::restore: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (m[i].size() != params_[i]->value.size() || v[i].size() != params_[i]->value.size())
      throw ShapeMismatch("Adam::restore: moment size mismatch for " + params_[i]->name);
  step_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace tabnet::model
