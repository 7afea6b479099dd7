#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcdlab/dataset.hpp"
#include "bcdlab/memory.hpp"
#include "bcdlab/optim.hpp"
#include "bcdlab/partition.hpp"

namespace bcdlab {

enum class CycleOrder { kAscending, kDescending };

struct ScheduleConfig {
  std::size_t blocks = 3;
  SplitStrategy strategy = SplitStrategy::kBalancedParams;
  /// Max optimizer steps per block visit.
  std::size_t inner_budget = 200;
  /// Plateau rule; when off a visit always runs the full budget.
  bool plateau = true;
  std::size_t plateau_window = 20;
  double plateau_tolerance = 1e-3;
  std::size_t outer_sweeps = 10;
  /// Stop when a sweep improves the full-data loss by less than this fraction. 0 disables.
  double outer_tolerance = 1e-4;
  double sample_rate = 1.0;
  CycleOrder order = CycleOrder::kAscending;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  /// Keep each block's optimizer state across visits instead of rebuilding it.
  bool persist_block_state = false;
  bool preinference = false;

  void validate() const;
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t block = 0;
  double loss = 0.0;
  /// params + optimizer state + gradients + tape (+ cache) live during the step.
  std::size_t float_units = 0;
};

struct VisitSummary {
  std::size_t sweep = 0;
  std::size_t block = 0;
  std::size_t steps = 0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  bool plateaued = false;
  std::size_t optimizer_units = 0;
  std::uint64_t forward_flops = 0;
  std::uint64_t cache_build_flops = 0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<VisitSummary> visits;
  /// Full-data loss before training, then after every sweep.
  std::vector<double> sweep_losses;
  std::uint64_t iterations = 0;
  double epochs = 0.0;
  std::uint64_t epochs_started = 0;
  std::size_t sweeps = 0;
  std::size_t peak_float_units = 0;
  std::uint64_t forward_flops = 0;
  std::uint64_t cache_build_flops = 0;
  MemorySnapshot memory;

  double final_loss() const { return sweep_losses.empty() ? 0.0 : sweep_losses.back(); }
  /// "step,block,loss,float_units" rows.
  std::string csv() const;
};

struct TrainResult {
  ParamSet params;
  TrainHistory history;
  Partition partition;
};

/// Plateau rule: with k = plateau_window, compares the mean of the last k losses to the mean
/// of the k before them and reports convergence when the relative improvement is below
/// plateau_tolerance. Also true once the window reaches inner_budget.
bool inner_converged(std::span<const double> visit_losses, const ScheduleConfig& cfg);

/// Cyclic block coordinate descent: each visit freezes every other block, builds a fresh
/// optimizer for the active one and trains until inner_converged.
/// Throws DivergenceError naming the block when the loss or an update goes non-finite.
TrainResult bcd_train(const ModelSpec& model, ParamSet params, const Dataset& data, const ScheduleConfig& cfg,
                      const OptimHyper& hyper, MemoryLedger* ledger = nullptr);

/// Conventional full-parameter reference loop with the same rounds and stopping rules.
TrainResult full_train(const ModelSpec& model, ParamSet params, const Dataset& data, const ScheduleConfig& cfg,
                       const OptimHyper& hyper, MemoryLedger* ledger = nullptr);

}  // namespace bcdlab
