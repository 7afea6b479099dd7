#include "bcdlab/econ.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bcdlab/report.hpp"

namespace bcdlab {
namespace {

constexpr double kMsPerHour = 3.6e6;

double iteration_gpu_ms(const RunRecord& r) {
  if (!r.iter_time_ms) throw std::invalid_argument("theoretical mode needs iter_time_ms for " + r.model);
  return static_cast<double>(r.total_gpus()) * *r.iter_time_ms;
}

// BCD-to-full ratio of a per-GPU weight (rate, or 1 for GPU-hours).
double reduction(const RunRecord& full, const RunRecord& bcd, double bf, CostMode mode, double full_rate,
                 double bcd_rate) {
  full.validate();
  bcd.validate();
  double full_cost = 0.0;
  double bcd_cost = 0.0;
  if (mode == CostMode::kEmpirical) {
    full_cost = gpu_hours(full) * full_rate;
    bcd_cost = gpu_hours(bcd) * bcd_rate;
  } else {
    if (!(bf > 0.0) || !std::isfinite(bf)) throw std::invalid_argument("bf must be positive");
    const double iters = full.iterations.value_or(1.0);
    full_cost = iters * iteration_gpu_ms(full) * full_rate;
    bcd_cost = iters * bf * iteration_gpu_ms(bcd) * bcd_rate;
  }
  if (full_cost == 0.0) throw std::domain_error("full-training cost is zero");
  return 100.0 * (1.0 - bcd_cost / full_cost);
}

}  // namespace

GpuCatalog::GpuCatalog(std::map<std::string, double> rates) {
  for (const auto& [gpu, r] : rates) set(gpu, r);
}

GpuCatalog GpuCatalog::defaults() { return GpuCatalog({{"RTX4090", 0.29}, {"A100", 1.20}, {"A800", 0.69}}); }

std::vector<std::pair<std::string, GpuCatalog>> GpuCatalog::alternates() {
  return {
      {"AutoDL", GpuCatalog({{"RTX4090", 0.31}, {"A800", 0.88}})},
      {"ParallelTechnology", GpuCatalog({{"RTX4090", 0.50}, {"A100", 2.25}})},
      {"AnyGPU", GpuCatalog({{"RTX4090", 0.40}})},
      {"AIGalaxy", GpuCatalog({{"RTX4090", 0.19}, {"A100", 1.12}})},
      {"Hengyuan", GpuCatalog({{"RTX4090", 0.22}, {"A100", 1.39}, {"A800", 1.25}})},
  };
}

void GpuCatalog::set(const std::string& gpu, double usd_per_hour) {
  if (gpu.empty()) throw std::invalid_argument("GPU name is empty");
  if (!(usd_per_hour > 0.0) || !std::isfinite(usd_per_hour)) {
    throw std::invalid_argument("rate for " + gpu + " must be positive");
  }
  rates_[gpu] = usd_per_hour;
}

double GpuCatalog::rate(std::string_view gpu) const {
  auto it = rates_.find(gpu);
  if (it == rates_.end()) throw std::out_of_range("unknown GPU: " + std::string(gpu));
  return it->second;
}

bool GpuCatalog::contains(std::string_view gpu) const { return rates_.find(gpu) != rates_.end(); }

std::string_view method_name(RunMethod m) {
  switch (m) {
    case RunMethod::kFull: return "full";
    case RunMethod::kBcd: return "bcd";
    case RunMethod::kOffload: return "offload";
  }
  return "?";
}

RunMethod method_from_name(std::string_view name) {
  if (name == "full") return RunMethod::kFull;
  if (name == "bcd") return RunMethod::kBcd;
  if (name == "offload") return RunMethod::kOffload;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

double RunRecord::wall_hours() const {
  if (hours) return *hours;
  if (iterations && iter_time_ms) return *iterations * *iter_time_ms / kMsPerHour;
  throw std::invalid_argument("record " + model + " has neither hours nor iterations with iter_time_ms");
}

std::string RunRecord::shape() const { return std::to_string(nodes) + "/" + std::to_string(gpus_per_node); }

void RunRecord::validate() const {
  if (nodes < 1 || gpus_per_node < 1) throw std::invalid_argument("record " + model + ": GPU counts must be >= 1");
  auto positive = [&](const std::optional<double>& v, const char* what) {
    if (v && (!(*v > 0.0) || !std::isfinite(*v))) {
      throw std::invalid_argument("record " + model + ": " + what + " must be positive");
    }
  };
  positive(iter_time_ms, "iter_time_ms");
  positive(iterations, "iterations");
  positive(hours, "hours");
  if (!hours && !iter_time_ms) {
    throw std::invalid_argument("record " + model + ": needs hours or iter_time_ms");
  }
}

BfMultiplier bf_multiplier(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("bf_multiplier needs at least one pair");
  BfMultiplier out;
  double sum = 0.0;
  for (const auto& [bcd, full] : pairs) {
    if (!(bcd > 0.0) || !(full > 0.0)) throw std::invalid_argument("round counts must be positive");
    const double ratio = bcd / full;
    sum += ratio;
    out.worst = std::max(out.worst, ratio);
  }
  out.pairs = pairs.size();
  out.average = sum / static_cast<double>(pairs.size());
  return out;
}

double gpu_hours(const RunRecord& record) {
  record.validate();
  return static_cast<double>(record.total_gpus()) * record.wall_hours();
}

double run_cost(const RunRecord& record, const GpuCatalog& catalog) {
  return gpu_hours(record) * catalog.rate(record.gpu);
}

double cost_reduction(const RunRecord& full, const RunRecord& bcd, double bf, const GpuCatalog& catalog,
                      CostMode mode) {
  return reduction(full, bcd, bf, mode, catalog.rate(full.gpu), catalog.rate(bcd.gpu));
}

double gpu_hour_reduction(const RunRecord& full, const RunRecord& bcd, double bf, CostMode mode) {
  return reduction(full, bcd, bf, mode, 1.0, 1.0);
}

std::string empirical_cost_csv(std::span<const std::pair<RunRecord, RunRecord>> pairs, const GpuCatalog& catalog) {
  CsvTable t({"model", "dataset", "platform", "full_gpus", "full_hours", "full_cost_usd", "bcd_gpus", "bcd_hours",
              "bcd_cost_usd", "cost_reduction_pct"});
  for (const auto& [full, bcd] : pairs) {
    t.add_row({full.model, full.dataset, full.gpu, std::to_string(full.total_gpus()), format_fixed(full.wall_hours(), 2),
               format_fixed(run_cost(full, catalog), 2), std::to_string(bcd.total_gpus()),
               format_fixed(bcd.wall_hours(), 2), format_fixed(run_cost(bcd, catalog), 2),
               format_fixed(cost_reduction(full, bcd, 1.0, catalog, CostMode::kEmpirical), 1)});
  }
  return t.str();
}

std::vector<TheoreticalCell> theoretical_cells(std::span<const std::pair<RunRecord, RunRecord>> pairs,
                                               const GpuCatalog& catalog, double bf_average, double bf_worst) {
  std::vector<TheoreticalCell> cells;
  for (const auto& [full, bcd] : pairs) {
    for (const auto& [scenario, bf] : {std::pair{"worst", bf_worst}, std::pair{"average", bf_average}}) {
      cells.push_back({full.model, full.shape(), bcd.shape(), scenario, bf,
                       cost_reduction(full, bcd, bf, catalog, CostMode::kTheoretical),
                       gpu_hour_reduction(full, bcd, bf, CostMode::kTheoretical)});
    }
  }
  return cells;
}

std::string theoretical_csv(std::span<const TheoreticalCell> cells) {
  CsvTable t({"model", "scenario", "bf", "full_ng", "bcd_ng", "cost_reduction_pct", "gpu_hour_reduction_pct"});
  for (const auto& c : cells) {
    t.add_row({c.model, c.scenario, format_double(c.bf), c.full_shape, c.bcd_shape,
               format_fixed(c.cost_reduction_pct, 1), format_fixed(c.gpu_hour_reduction_pct, 1)});
  }
  return t.str();
}

}  // namespace bcdlab
