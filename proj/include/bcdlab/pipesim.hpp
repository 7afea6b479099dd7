#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcdlab {

struct StageSpec {
  double fwd_ms = 0.0;
  double bwd_full_ms = 0.0;
  bool frozen = false;
  std::size_t device = 0;
};

struct PipelineConfig {
  std::vector<StageSpec> stages;
  std::size_t microbatches = 1;
  /// Transfer delay on every boundary between stages placed on different devices.
  double comm_ms = 0.0;
  /// Backward time multiplier for frozen stages that stay in the loop.
  double frozen_bwd_factor = 0.5;
  /// Drop the contiguous frozen prefix from the loop and charge it once as a cache build.
  bool preinference = false;
  double allreduce_ms = 0.0;

  void validate() const;
};

enum class TaskKind { kForward, kBackward };

struct TraceEvent {
  double start_ms = 0.0;
  double end_ms = 0.0;
  std::size_t device = 0;
  std::size_t stage = 0;  // index in the original config
  std::size_t microbatch = 0;
  TaskKind kind = TaskKind::kForward;

  /// "F<stage>.<mb>" or "B<stage>.<mb>".
  std::string task() const;
};

struct SimResult {
  double iter_time_ms = 0.0;
  std::vector<TraceEvent> trace;  // sorted by (start, device, stage, microbatch)
  std::map<std::size_t, double> device_busy_ms;
  std::vector<std::size_t> elided_stages;
  /// One-time pre-inference charge: elided forward work over all microbatches plus allreduce_ms.
  double prefix_build_ms = 0.0;

  /// "start_ms,end_ms,device,task".
  std::string trace_csv() const;
};

/// Fill-drain schedule: every stage runs F0..F(m-1), then B(m-1)..B0. The last stage starts
/// backwards only after all of its forwards. Tasks on a shared device follow a fixed order:
/// forwards by (microbatch, stage), then backwards by (microbatch desc, stage desc).
SimResult simulate(const PipelineConfig& cfg);

/// The stage list actually simulated (after prefix elision and frozen backward scaling).
struct LoopStage {
  std::size_t original = 0;
  double fwd_ms = 0.0;
  double bwd_ms = 0.0;
  std::size_t device = 0;
};
std::vector<LoopStage> loop_stages(const PipelineConfig& cfg);

struct CompareRow {
  std::string name;
  double iter_time_ms = 0.0;
  /// First config's iteration time divided by this one's.
  double speedup = 0.0;
};

std::vector<CompareRow> compare(std::span<const std::pair<std::string, PipelineConfig>> configs);
/// "config,iter_time_ms,speedup_vs_first".
std::string compare_csv(std::span<const CompareRow> rows);

struct Calibration {
  double scale = 1.0;  // applied to every fwd/bwd time; comm and allreduce untouched
  double predicted_ms = 0.0;
  double target_ms = 0.0;
  double relative_error = 0.0;
};

/// Finds the stage-time scale whose makespan hits target_ms (bisection; makespan is
/// monotone in the scale). Reports the residual rather than asserting it.
Calibration calibrate(const PipelineConfig& cfg, double target_ms);

PipelineConfig scaled(const PipelineConfig& cfg, double factor);

}  // namespace bcdlab
