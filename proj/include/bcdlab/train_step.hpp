#pragma once

#include <cstddef>
#include <span>

#include "bcdlab/dataset.hpp"
#include "bcdlab/memory.hpp"
#include "bcdlab/optim.hpp"

namespace bcdlab {

struct StepResult {
  double loss = 0.0;
  std::size_t activation_units = 0;
  std::size_t grad_units = 0;
};

/// forward -> backward -> optimizer step on one batch. Tape and gradient buffers are charged to
/// `ledger` (when given) for the duration of the step.
StepResult train_step(const ModelSpec& model, ParamSet& params, const Dataset& data,
                      std::span<const std::size_t> batch, const FreezeMask& mask, OptimState& state,
                      const OptimHyper& hyper, OpCounter* ops = nullptr, MemoryLedger* ledger = nullptr);

/// Same as train_step, entering the model at `start_layer` with a precomputed activation.
StepResult train_step_from(const ModelSpec& model, ParamSet& params, const Tensor& activation,
                           std::size_t start_layer, const Tensor& targets, const FreezeMask& mask,
                           OptimState& state, const OptimHyper& hyper, OpCounter* ops = nullptr,
                           MemoryLedger* ledger = nullptr);

}  // namespace bcdlab
