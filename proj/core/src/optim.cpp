#include "medrep/optim.hpp"

#include <cmath>

#include "medrep/errors.hpp"

namespace medrep {

void sgd_step(std::span<Tensor* const> params, double lr) {
  for (Tensor* p : params) {
    if (!p->tracked()) continue;
    auto values = p->values();
    const auto grad = p->grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
    p->zero_grad();
  }
}

void Adam::step(std::span<Tensor* const> params) {
  if (first_moment_.empty()) {
    for (const Tensor* p : params) {
      first_moment_.emplace_back(p->size(), 0.0);
      second_moment_.emplace_back(p->size(), 0.0);
    }
  }
  if (first_moment_.size() != params.size()) {
    throw ContractError("Adam::step: parameter list changed between steps");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    if (!p.tracked()) continue;
    auto values = p.values();
    const auto grad = p.grad();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * grad[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
    p.zero_grad();
  }
}

}  // namespace medrep
