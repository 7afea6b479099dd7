#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "bcdlab/model.hpp"

namespace bcdlab {

enum class OptimKind { kSgd, kAdam };

struct OptimHyper {
  OptimKind kind = OptimKind::kSgd;
  double lr = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;

  /// lr 0.1, momentum 0.9, weight decay 1e-5.
  static OptimHyper sgd_defaults();
  /// lr 1e-4, weight decay 1e-5, default moment coefficients.
  static OptimHyper adam_defaults();
  /// Adam with lr 5e-5, used for the multi-billion parameter runs.
  static OptimHyper adam_large_model_defaults();

  /// Throws std::invalid_argument when any range constraint is violated.
  void validate() const;
};

/// Number of per-parameter state buffers: 1 for SGD momentum, 2 for Adam.
std::size_t state_buffers(OptimKind kind);

/// Optimizer buffers for exactly the trainable layers of one block visit.
struct OptimState {
  OptimKind kind = OptimKind::kSgd;
  /// layer -> buffer index -> tensors matching that layer's parameters
  std::map<std::size_t, std::vector<std::vector<Tensor>>> buffers;
  std::uint64_t steps = 0;

  std::size_t float_units() const;
};

/// Zeroed state for the layers `mask` trains. Throws when nothing trainable has parameters.
OptimState alloc_state(const ModelSpec& model, const FreezeMask& mask, const OptimHyper& hyper);

/// One update. SGD: v = mu*v + g + wd*w; w -= lr*v.
/// Adam: bias-corrected moments, w -= lr*(m_hat/(sqrt(v_hat)+eps) + wd*w).
/// `grads` must cover exactly the layers held in `state`.
void step(ParamSet& params, const GradSet& grads, OptimState& state, const OptimHyper& hyper);

}  // namespace bcdlab
