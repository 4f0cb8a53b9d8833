#include "hyperslim/optim.hpp"

#include <cmath>

#include "hyperslim/error.hpp"

namespace hyperslim {

Optimizer::Optimizer(OptimizerKind kind, std::vector<Tensor*> params,
                     AdamSettings adam)
    : kind_(kind), params_(std::move(params)), adam_(adam) {
  if (kind_ == OptimizerKind::kAdam) {
    for (const Tensor* p : params_) {
      first_moment_.emplace_back(p->numel(), 0.0);
      second_moment_.emplace_back(p->numel(), 0.0);
    }
  }
}

void Optimizer::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->has_grad() && params_[i]->numel() > 0) {
      throw ValidationError("optimizer_step: parameter " + std::to_string(i) +
                            " has no gradient");
    }
  }
  ++steps_;
  if (kind_ == OptimizerKind::kSgd) {
    for (Tensor* p : params_) {
      auto g = p->grad();
      auto v = p->data();
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= lr * g[k];
    }
    return;
  }
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(adam_.beta1, t);
  const double correction2 = 1.0 - std::pow(adam_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i]->grad();
    auto v = params_[i]->data();
    auto& m = first_moment_[i];
    auto& s = second_moment_[i];
    if (m.size() != v.size()) {
      throw ValidationError("optimizer_step: parameter " + std::to_string(i) +
                            " changed size since construction");
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      m[k] = adam_.beta1 * m[k] + (1.0 - adam_.beta1) * g[k];
      s[k] = adam_.beta2 * s[k] + (1.0 - adam_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double s_hat = s[k] / correction2;
      v[k] -= lr * m_hat / (std::sqrt(s_hat) + adam_.epsilon);
    }
  }
}

void Optimizer::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

}  // namespace hyperslim
