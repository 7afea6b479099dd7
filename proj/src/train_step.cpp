#include "bcdlab/train_step.hpp"

namespace bcdlab {

StepResult train_step_from(const ModelSpec& model, ParamSet& params, const Tensor& activation,
                           std::size_t start_layer, const Tensor& targets, const FreezeMask& mask,
                           OptimState& state, const OptimHyper& hyper, OpCounter* ops, MemoryLedger* ledger) {
  ForwardResult fwd = forward_from(model, params, activation, start_layer, targets, mask.backward_start, ops);
  LedgerLease tape_lease(ledger, MemCategory::kActivations, fwd.tape.float_units());
  GradSet grads = backward(model, params, fwd.tape, mask);
  LedgerLease grad_lease(ledger, MemCategory::kGrads, float_units(grads));
  step(params, grads, state, hyper);
  return StepResult{fwd.loss, tape_lease.units(), grad_lease.units()};
}

StepResult train_step(const ModelSpec& model, ParamSet& params, const Dataset& data,
                      std::span<const std::size_t> batch, const FreezeMask& mask, OptimState& state,
                      const OptimHyper& hyper, OpCounter* ops, MemoryLedger* ledger) {
  const Batch b = data.gather(batch);
  return train_step_from(model, params, b.inputs, 0, b.targets, mask, state, hyper, ops, ledger);
}

}  // namespace bcdlab
