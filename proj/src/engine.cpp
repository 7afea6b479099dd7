#include "bcdlab/engine.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "bcdlab/errors.hpp"
#include "bcdlab/preinfer.hpp"
#include "bcdlab/report.hpp"
#include "bcdlab/sampling.hpp"
#include "bcdlab/train_step.hpp"

namespace bcdlab {
namespace {

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

bool outer_converged(double previous, double current, double tolerance) {
  if (tolerance <= 0.0) return false;
  if (previous == 0.0) return true;
  return (previous - current) / std::abs(previous) < tolerance;
}

void check_inputs(const ModelSpec& model, const ParamSet& params, const Dataset& data, const ScheduleConfig& cfg,
                  const OptimHyper& hyper) {
  cfg.validate();
  hyper.validate();
  plan_model(model);
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (params.size() != model.layer_count()) throw ShapeError("parameter set does not match model");
}

// Tracks bookkeeping shared by the BCD and reference loops.
struct RunRecorder {
  TrainHistory history;
  std::size_t param_units = 0;

  void record_step(std::size_t block, const StepResult& r, std::size_t state_units, std::size_t cache_units) {
    const std::size_t units = param_units + state_units + r.grad_units + r.activation_units + cache_units;
    history.steps.push_back({history.iterations, block, r.loss, units});
    history.peak_float_units = std::max(history.peak_float_units, units);
    ++history.iterations;
  }
};

}  // namespace

void ScheduleConfig::validate() const {
  if (blocks < 1) throw std::invalid_argument("blocks must be >= 1");
  if (inner_budget < 1) throw std::invalid_argument("inner_budget must be >= 1");
  if (plateau && plateau_window < 1) throw std::invalid_argument("plateau_window must be >= 1");
  if (plateau && !(plateau_tolerance >= 0.0)) throw std::invalid_argument("plateau_tolerance must be >= 0");
  if (!(outer_tolerance >= 0.0)) throw std::invalid_argument("outer_tolerance must be >= 0");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) throw std::invalid_argument("sample_rate must be in (0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

std::string TrainHistory::csv() const {
  std::ostringstream out;
  out << "step,block,loss,float_units\n";
  for (const auto& s : steps) {
    out << s.step << "," << s.block << "," << format_double(s.loss) << "," << s.float_units << "\n";
  }
  return out.str();
}

bool inner_converged(std::span<const double> losses, const ScheduleConfig& cfg) {
  if (losses.empty()) throw std::invalid_argument("inner_converged needs at least one loss");
  if (losses.size() >= cfg.inner_budget) return true;
  if (!cfg.plateau) return false;
  const std::size_t k = cfg.plateau_window;
  if (losses.size() < 2 * k) return false;
  const double recent = mean(losses.subspan(losses.size() - k, k));
  const double earlier = mean(losses.subspan(losses.size() - 2 * k, k));
  if (earlier == 0.0) return true;
  return (earlier - recent) / std::abs(earlier) < cfg.plateau_tolerance;
}

TrainResult bcd_train(const ModelSpec& model, ParamSet params, const Dataset& data, const ScheduleConfig& cfg,
                      const OptimHyper& hyper, MemoryLedger* ledger) {
  check_inputs(model, params, data, cfg, hyper);
  TrainResult result;
  result.partition = split_layers(model, cfg.blocks, cfg.strategy);
  const std::size_t m = result.partition.block_count();

  RunRecorder rec;
  rec.param_units = float_units(params);
  LedgerLease param_lease(ledger, MemCategory::kParams, rec.param_units);

  BatchStream stream(data.size(), cfg.batch_size, cfg.sample_rate, cfg.seed);
  const Batch everything = data.all();
  rec.history.sweep_losses.push_back(evaluate_loss(model, params, everything));

  // Optimizer state lives in `persisted` when persist_block_state is on; otherwise only the
  // active block's state exists.
  std::map<std::size_t, std::pair<OptimState, LedgerLease>> persisted;
  std::optional<OptimState> active;
  LedgerLease active_lease;
  std::optional<std::size_t> active_block;
  std::optional<ActivationCache> cache;
  LedgerLease cache_lease;

  for (std::size_t sweep = 0; sweep < cfg.outer_sweeps; ++sweep) {
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t block = cfg.order == CycleOrder::kAscending ? k : m - 1 - k;
      const FreezeMask mask = mask_for(result.partition, block);

      OptimState* state = nullptr;
      if (cfg.persist_block_state) {
        auto it = persisted.find(block);
        if (it == persisted.end()) {
          OptimState fresh = alloc_state(model, mask, hyper);
          const std::size_t units = fresh.float_units();
          it = persisted.emplace(block, std::pair{std::move(fresh), LedgerLease(ledger, MemCategory::kOptimizerState, units)})
                   .first;
        }
        state = &it->second.first;
      } else {
        if (active_block != block) {
          active_lease.reset();
          active = alloc_state(model, mask, hyper);
          active_lease = LedgerLease(ledger, MemCategory::kOptimizerState, active->float_units());
          active_block = block;
        }
        state = &*active;
      }
      std::size_t state_units = 0;
      if (cfg.persist_block_state) {
        for (const auto& [_, entry] : persisted) state_units += entry.first.float_units();
      } else {
        state_units = state->float_units();
      }

      VisitSummary visit;
      visit.sweep = sweep;
      visit.block = block;
      visit.optimizer_units = state->float_units();

      if (cfg.preinference && mask.backward_start > 0) {
        if (!cache || cache->prefix_end != mask.backward_start || !cache_valid(*cache, params)) {
          cache_lease.reset();
          cache = build_cache(model, params, data, mask.backward_start);
          cache_lease = LedgerLease(ledger, MemCategory::kCache, cache->float_units());
          visit.cache_build_flops = cache->build_cost;
          rec.history.cache_build_flops += cache->build_cost;
        }
      } else if (cache) {
        cache_lease.reset();
        cache.reset();
      }
      const std::size_t cache_units = cache ? cache->float_units() : 0;

      std::vector<double> losses;
      OpCounter ops;
      while (true) {
        const auto batch = stream.next();
        StepResult r;
        try {
          r = cache ? train_step_cached(model, params, *cache, data, batch, mask, *state, hyper, &ops, ledger)
                    : train_step(model, params, data, batch, mask, *state, hyper, &ops, ledger);
        } catch (const NonFiniteError& e) {
          throw DivergenceError(block, e.what());
        }
        rec.record_step(block, r, state_units, cache_units);
        losses.push_back(r.loss);
        if (inner_converged(losses, cfg)) break;
      }
      visit.steps = losses.size();
      visit.first_loss = losses.front();
      visit.last_loss = losses.back();
      visit.plateaued = losses.size() < cfg.inner_budget;
      visit.forward_flops = ops.forward;
      rec.history.forward_flops += ops.forward;
      rec.history.visits.push_back(visit);
    }
    rec.history.sweeps = sweep + 1;
    double loss;
    try {
      loss = evaluate_loss(model, params, everything);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(rec.history.visits.back().block, e.what());
    }
    const double previous = rec.history.sweep_losses.back();
    rec.history.sweep_losses.push_back(loss);
    if (outer_converged(previous, loss, cfg.outer_tolerance)) break;
  }

  rec.history.epochs = stream.epochs_consumed();
  rec.history.epochs_started = stream.epochs_started();
  if (ledger) rec.history.memory = ledger->snapshot();
  result.params = std::move(params);
  result.history = std::move(rec.history);
  return result;
}

TrainResult full_train(const ModelSpec& model, ParamSet params, const Dataset& data, const ScheduleConfig& cfg,
                       const OptimHyper& hyper, MemoryLedger* ledger) {
  check_inputs(model, params, data, cfg, hyper);
  TrainResult result;
  result.partition = split_layers(model, 1, SplitStrategy::kEqualLayers);

  RunRecorder rec;
  rec.param_units = float_units(params);
  LedgerLease param_lease(ledger, MemCategory::kParams, rec.param_units);

  const FreezeMask mask = FreezeMask::all_trainable(model.layer_count());
  OptimState state = alloc_state(model, mask, hyper);
  LedgerLease state_lease(ledger, MemCategory::kOptimizerState, state.float_units());

  BatchStream stream(data.size(), cfg.batch_size, cfg.sample_rate, cfg.seed);
  const Batch everything = data.all();
  rec.history.sweep_losses.push_back(evaluate_loss(model, params, everything));

  for (std::size_t round = 0; round < cfg.outer_sweeps; ++round) {
    std::vector<double> losses;
    OpCounter ops;
    do {
      const auto batch = stream.next();
      StepResult r;
      try {
        r = train_step(model, params, data, batch, mask, state, hyper, &ops, ledger);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(0, e.what());
      }
      rec.record_step(0, r, state.float_units(), 0);
      losses.push_back(r.loss);
    } while (!inner_converged(losses, cfg));
    rec.history.visits.push_back({round, 0, losses.size(), losses.front(), losses.back(),
                                  losses.size() < cfg.inner_budget, state.float_units(), ops.forward, 0});
    rec.history.forward_flops += ops.forward;
    rec.history.sweeps = round + 1;
    const double loss = evaluate_loss(model, params, everything);
    const double previous = rec.history.sweep_losses.back();
    rec.history.sweep_losses.push_back(loss);
    if (outer_converged(previous, loss, cfg.outer_tolerance)) break;
  }

  rec.history.epochs = stream.epochs_consumed();
  rec.history.epochs_started = stream.epochs_started();
  if (ledger) rec.history.memory = ledger->snapshot();
  result.params = std::move(params);
  result.history = std::move(rec.history);
  return result;
}

}  // namespace bcdlab
