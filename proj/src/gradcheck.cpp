#include "bcdlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcdlab {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

double grad_check(const ModelSpec& model, const ParamSet& params, const Batch& batch, double eps,
                  const FreezeMask& mask) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check eps must be positive");
  const auto fwd = forward(model, params, batch, mask.first_trainable());
  const GradSet grads = backward(model, params, fwd.tape, mask);

  ParamSet probe = params;
  double worst = 0.0;
  for (const auto& [layer, tensors] : grads) {
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      for (std::size_t k = 0; k < tensors[t].size(); ++k) {
        double& w = probe[layer][t][k];
        const double saved = w;
        w = saved + eps;
        const double up = evaluate_loss(model, probe, batch);
        w = saved - eps;
        const double down = evaluate_loss(model, probe, batch);
        w = saved;
        worst = std::max(worst, relative_error(tensors[t][k], (up - down) / (2.0 * eps)));
      }
    }
  }
  return worst;
}

double grad_check(const ModelSpec& model, const ParamSet& params, const Batch& batch, double eps) {
  return grad_check(model, params, batch, eps, FreezeMask::all_trainable(model.layer_count()));
}

double grad_check(const ModelSpec& model, const Batch& batch, double eps) {
  return grad_check(model, init_params(model), batch, eps);
}

}  // namespace bcdlab
