#pragma once

#include <span>
#include <vector>

#include "medrep/tensor.hpp"

namespace medrep {

/// p <- p - lr * grad for every tracked tensor, then grads reset to zero.
void sgd_step(std::span<Tensor* const> params, double lr);

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are keyed by position in
/// the parameter list, so pass the same list in the same order every step.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::span<Tensor* const> params);
  std::size_t steps_taken() const noexcept { return steps_; }

 private:
  AdamOptions options_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::size_t steps_ = 0;
};

}  // namespace medrep
