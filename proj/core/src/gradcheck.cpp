#include "medrep/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

double evaluate(const LossBuilder& build_loss) {
  ad::Tape tape(ad::GradMode::kInference);
  return build_loss(tape).value().item();
}

}  // namespace

GradientCheckResult check_gradients(std::span<Tensor* const> params,
                                    const LossBuilder& build_loss, double eps,
                                    FdStencil stencil) {
  if (!(eps > 0.0)) throw ContractError("check_gradients: eps must be > 0");

  std::vector<std::vector<double>> analytic;
  {
    ad::Tape tape;
    const ad::Var loss = build_loss(tape);
    const double replay = evaluate(build_loss);
    if (loss.value().item() != replay) {
      throw ContractError(
          "check_gradients: loss is not deterministic (dropout enabled?)");
    }
    tape.backward(loss);
    for (Tensor* p : params) {
      const auto g = tape.gradient(*p);
      std::vector<double> grad(p->size(), 0.0);
      std::copy(g.begin(), g.end(), grad.begin());
      analytic.push_back(std::move(grad));
    }
  }

  GradientCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi]->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      const auto at = [&](double offset) {
        values[i] = saved + offset;
        return evaluate(build_loss);
      };
      double numeric = 0.0;
      if (stencil == FdStencil::kTwoPoint) {
        numeric = (at(eps) - at(-eps)) / (2.0 * eps);
      } else {
        numeric = (8.0 * (at(eps) - at(-eps)) - (at(2 * eps) - at(-2 * eps))) / (12.0 * eps);
      }
      values[i] = saved;

      const double exact = analytic[pi][i];
      const double denom =
          std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.checked_scalars;
      result.max_absolute_error = std::max(result.max_absolute_error, std::abs(exact - numeric));
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = pi;
        result.worst_element = i;
      }
    }
  }
  return result;
}

}  // namespace medrep
