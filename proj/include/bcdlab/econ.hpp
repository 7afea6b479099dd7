#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bcdlab {

inline constexpr double kBfAverage = 1.39;
/// Worst-case multiplier as stated alongside the averages.
inline constexpr double kBfWorstReported = 2.89;
/// Worst-case multiplier recomputed from the five Adam epoch/iteration pairs.
inline constexpr double kBfWorstRecomputed = 2.78;

/// USD per GPU-hour keyed by GPU name.
class GpuCatalog {
 public:
  GpuCatalog() = default;
  explicit GpuCatalog(std::map<std::string, double> rates);

  /// RTX4090 0.29, A100 1.20, A800 0.69.
  static GpuCatalog defaults();
  /// Static price survey of other rental providers; each lists only the GPUs it offers.
  static std::vector<std::pair<std::string, GpuCatalog>> alternates();

  /// Throws std::invalid_argument on a non-positive or non-finite rate.
  void set(const std::string& gpu, double usd_per_hour);
  /// Throws std::out_of_range for an unknown GPU.
  double rate(std::string_view gpu) const;
  bool contains(std::string_view gpu) const;
  const std::map<std::string, double, std::less<>>& rates() const noexcept { return rates_; }

 private:
  std::map<std::string, double, std::less<>> rates_;
};

enum class RunMethod { kFull, kBcd, kOffload };
std::string_view method_name(RunMethod m);
RunMethod method_from_name(std::string_view name);

struct RunRecord {
  std::string model;
  std::string dataset;
  RunMethod method = RunMethod::kFull;
  int nodes = 1;
  int gpus_per_node = 1;
  std::string gpu = "RTX4090";
  /// Either iterations * iter_time_ms or hours must be present.
  std::optional<double> iter_time_ms;
  std::optional<double> iterations;
  std::optional<double> hours;

  int total_gpus() const noexcept { return nodes * gpus_per_node; }
  /// Wall-clock hours: `hours` if given, else iterations * iter_time_ms / 3.6e6.
  double wall_hours() const;
  /// "nodes/gpus_per_node".
  std::string shape() const;
  void validate() const;
};

struct BfMultiplier {
  double average = 0.0;
  double worst = 0.0;
  std::size_t pairs = 0;
};

/// Pairs are (bcd_rounds, full_rounds). Throws std::invalid_argument on an empty list
/// or a non-positive round count.
BfMultiplier bf_multiplier(std::span<const std::pair<double, double>> pairs);

/// total GPUs * wall hours * rate.
double run_cost(const RunRecord& record, const GpuCatalog& catalog);

/// total GPUs * wall hours.
double gpu_hours(const RunRecord& record);

enum class CostMode {
  /// Both records carry measured hours (or iterations); bf is ignored.
  kEmpirical,
  /// BCD iteration count is projected as full iterations * bf; only per-iteration times matter.
  kTheoretical,
};

/// 100 * (1 - cost_bcd / cost_full). Throws std::domain_error when the full cost is zero.
double cost_reduction(const RunRecord& full, const RunRecord& bcd, double bf, const GpuCatalog& catalog,
                      CostMode mode = CostMode::kTheoretical);

/// Same as cost_reduction with the rental rate stripped.
double gpu_hour_reduction(const RunRecord& full, const RunRecord& bcd, double bf,
                          CostMode mode = CostMode::kTheoretical);

// ---- tables ----

/// One row per record pair: model,dataset,platform,full_gpus,full_hours,full_cost_usd,
/// bcd_gpus,bcd_hours,bcd_cost_usd,cost_reduction_pct.
std::string empirical_cost_csv(std::span<const std::pair<RunRecord, RunRecord>> pairs, const GpuCatalog& catalog);

/// Projected cost and GPU-hour reductions for a set of (full, bcd) iteration-time pairs.
struct TheoreticalCell {
  std::string model;
  std::string full_shape;
  std::string bcd_shape;
  std::string scenario;  // "average" or "worst"
  double bf = 0.0;
  double cost_reduction_pct = 0.0;
  double gpu_hour_reduction_pct = 0.0;
};

std::vector<TheoreticalCell> theoretical_cells(std::span<const std::pair<RunRecord, RunRecord>> pairs,
                                               const GpuCatalog& catalog, double bf_average, double bf_worst);

/// model,scenario,bf,full_ng,bcd_ng,cost_reduction_pct,gpu_hour_reduction_pct
std::string theoretical_csv(std::span<const TheoreticalCell> cells);

}  // namespace bcdlab
