#pragma once

#include <functional>
#include <span>

#include "medrep/autodiff.hpp"
#include "medrep/tensor.hpp"

namespace medrep {

using LossBuilder = std::function<ad::Var(ad::Tape&)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  // Largest |analytic - fd|. Central differences carry roughly 1e-11 of
  // roundoff, so entries with near-zero gradients can show large relative
  // error while agreeing to many digits in absolute terms.
  double max_absolute_error = 0.0;
  std::size_t checked_scalars = 0;
  // Location of the worst entry: index into `params` and element offset.
  std::size_t worst_param = 0;
  std::size_t worst_element = 0;
};

/// Central-difference stencils. The two-point rule has O(eps^2) truncation
/// and ~ulp(loss)/eps roundoff, which bottoms out near 1e-10 absolute for
/// O(1) losses: entries whose gradient is ~1e-7 cannot be resolved to 1e-4
/// relative at any eps. The five-point rule (O(eps^4)) at eps ~1e-3 can,
/// for twice the forward passes.
enum class FdStencil { kTwoPoint, kFivePoint };

/// Compares reverse-mode gradients against central differences for every
/// scalar of every tensor in `params`. Relative error per entry is
/// |analytic - fd| / max(|analytic|, |fd|, 1e-8). The loss builder must be
/// deterministic; two forward passes that disagree raise ContractError.
GradientCheckResult check_gradients(std::span<Tensor* const> params,
                                    const LossBuilder& build_loss,
                                    double eps = 1e-5,
                                    FdStencil stencil = FdStencil::kTwoPoint);

}  // namespace medrep
