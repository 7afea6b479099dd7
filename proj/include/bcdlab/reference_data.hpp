#pragma once

// Published measurements used as fixtures by the acceptance checks, the report command and the
// bundled data files. Values are copied as printed; no rounding fixes.

#include <array>
#include <string_view>
#include <utility>

namespace bcdlab::reference {

// ---- memory by unfrozen fraction (MB, GPT-2 small) ----

inline constexpr double kUfpParamsMb = 608.15;
inline constexpr std::array<double, 4> kUfpFractions = {1.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0};
inline constexpr std::array<double, 4> kUfpSgdMb = {1824.45, 1216.30, 1013.58, 912.23};
inline constexpr std::array<double, 4> kUfpAdamMb = {2432.60, 1520.38, 1216.30, 1064.26};

// ---- training rounds to convergence, (bcd, full) ----

struct RoundPair {
  std::string_view model;
  double bcd;
  double full;
};

inline constexpr std::array<RoundPair, 5> kAdamRounds = {{
    {"ResNet8", 309, 389},
    {"ResNet14", 372, 491},
    {"ResNet20", 423, 768},
    {"GPT2-wiki", 232471, 83690},
    {"GPT2-web", 1045000, 499000},
}};

inline constexpr std::array<RoundPair, 7> kSgdRounds = {{
    {"ResNet8", 395, 639},
    {"ResNet14", 391, 323},
    {"ResNet20", 322, 191},
    {"ResNet50", 251, 273},
    {"ResNet101", 376, 286},
    {"GPT2-wiki", 204575, 111587},
    {"GPT2-web", 2770000, 1045000},
}};

// ---- measured runs: GPUs, USD and hours per side ----

struct RealCostRow {
  std::string_view model;
  std::string_view dataset;
  std::string_view gpu;
  int full_gpus;
  double full_cost;
  double full_hours;
  int bcd_gpus;
  double bcd_cost;
  double bcd_hours;
};

inline constexpr std::array<RealCostRow, 8> kRealCost = {{
    {"G-2B", "slimpajama", "RTX4090", 3, 6.08, 6.99, 2, 7.30, 12.57},
    {"G-2B", "slimpajama", "A100", 1, 49.59, 40.95, 1, 116.53, 96.22},
    {"L-7B", "wiki", "A800", 2, 26.30, 19.01, 1, 18.74, 27.10},
    {"L-7B", "wiki", "RTX4090", 8, 3.37, 1.45, 4, 3.29, 2.84},
    {"L-7B", "wiki", "A100", 2, 43.74, 18.06, 1, 31.22, 25.78},
    {"G-7B", "wiki", "A800", 2, 70.08, 50.66, 1, 41.36, 59.79},
    {"G-7B", "alpaca", "A800", 2, 18.49, 13.37, 1, 12.21, 17.66},
    {"L-7B", "alpaca", "A800", 2, 26.39, 19.08, 1, 17.63, 25.48},
}};

// ---- per-iteration times feeding the projected tables ----

struct IterTime {
  std::string_view model;
  int nodes;
  int gpus_per_node;
  double ms;
};

/// Full-parameter pipeline runs on RTX4090 clusters.
inline constexpr std::array<IterTime, 4> kFull4090 = {{
    {"G-1.6B", 1, 2, 576},
    {"G-5.4B", 2, 4, 1934},
    {"G-10B", 2, 8, 3252},
    {"G-20B", 4, 8, 6378},
}};

/// Full-parameter runs on A100; A800 tables reuse the same node shapes.
inline constexpr std::array<IterTime, 4> kFullA100 = {{
    {"G-1.6B", 1, 1, 1064},
    {"G-5.4B", 1, 2, 2952},
    {"G-10B", 1, 4, 5772},
    {"G-20B", 1, 8, 11222},
}};

/// BCD with a third of the parameters unfrozen on RTX4090.
inline constexpr std::array<IterTime, 4> kBcd4090 = {{
    {"G-1.6B", 1, 1, 378.49},
    {"G-5.4B", 1, 4, 1210.61},
    {"G-10B", 1, 8, 2414.32},
    {"G-20B", 2, 8, 3606},
}};

// Printed reductions (percent), columns G-1.6B, G-5.4B, G-10B, G-20B.
struct ReductionRow {
  std::array<double, 4> worst;
  std::array<double, 4> average;
};

inline constexpr ReductionRow kCost4090 = {{54.3, 28.9, -2.6, 28.2}, {80.4, 68.5, 53.6, 68.3}};
inline constexpr ReductionRow kCostA100 = {{72.2, 43.8, 42.6, 55.1}, {88.8, 75.5, 74.9, 80.8}};
inline constexpr ReductionRow kCostA800 = {{58.7, 9.5, 6.7, 27.4}, {82.5, 59.4, 58.1, 67.7}};
inline constexpr ReductionRow kGpuHours4090 = {{56.1, 13.3, -2.8, 29.4}, {80.2, 60.9, 53.6, 68.2}};
inline constexpr ReductionRow kGpuHoursA100 = {{1.5, -127.0, -131.8, -78.0}, {55.6, -2.4, -4.5, 19.7}};
inline constexpr ReductionRow kGpuHoursA800 = {{6.4, -114.7, -121.6, -70.5}, {57.8, 3.2, 0.08, 23.1}};

}  // namespace bcdlab::reference
