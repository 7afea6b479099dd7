#pragma once

#include "bcdlab/model.hpp"

namespace bcdlab {

/// Magnitudes below this are compared absolutely rather than relatively.
inline constexpr double kGradCheckFloor = 1e-5;

/// Relative error between an analytic and a numeric derivative.
double relative_error(double analytic, double numeric);

/// Max relative error between backward() and central differences over every
/// trainable parameter. Default mask trains everything.
double grad_check(const ModelSpec& model, const ParamSet& params, const Batch& batch, double eps,
                  const FreezeMask& mask);
double grad_check(const ModelSpec& model, const ParamSet& params, const Batch& batch, double eps);
double grad_check(const ModelSpec& model, const Batch& batch, double eps);

}  // namespace bcdlab
