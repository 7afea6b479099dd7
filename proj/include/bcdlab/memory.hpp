#pragma once

#include <array>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcdlab/optim.hpp"

namespace bcdlab {

// ---- predicted memory ----

enum class MemoryMode {
  /// Gradient u*P, optimizer state 3u*P for Adam (u*P for SGD momentum), activations a*P.
  kIntro,
  /// P*(1 + c*u), c = 3 for Adam and 2 for SGD momentum; no activation term.
  kTable,
};

struct MemoryModel {
  MemoryMode mode = MemoryMode::kTable;
  double params = 0.0;  // P, in float units
  double unfrozen = 1.0;  // u
  OptimKind optimizer = OptimKind::kAdam;
  double activation_coeff = 0.7;
  bool recompute = false;
  /// Replaces the fitted slope c in table mode.
  std::optional<double> table_coeff;

  void validate() const;
};

/// Predicted training memory in float units (or whatever unit `params` carries).
double predict(const MemoryModel& model);

/// Slope coefficient c of the table-mode fit P*(1 + c*u).
double table_coefficient(OptimKind kind);

struct UfpRow {
  double unfrozen;
  double units;
};

std::vector<UfpRow> ufp_table(double params, OptimKind optimizer, const std::vector<double>& unfrozen,
                              std::optional<double> table_coeff = std::nullopt);

/// CSV with header "ufp,optimizer,memory_<unit>".
std::string ufp_table_csv(const std::vector<UfpRow>& rows, OptimKind optimizer, std::string_view unit = "float_units");

// ---- measured memory ----

enum class MemCategory { kParams, kGrads, kOptimizerState, kActivations, kCache };
inline constexpr std::size_t kMemCategoryCount = 5;

std::string_view category_name(MemCategory c);

struct MemorySnapshot {
  std::array<std::size_t, kMemCategoryCount> live{};
  std::array<std::size_t, kMemCategoryCount> peak{};
  std::size_t live_total = 0;
  std::size_t peak_total = 0;
  /// Peak of params + grads + optimizer_state, the categories the table fit covers.
  std::size_t peak_model_state = 0;

  std::size_t live_of(MemCategory c) const { return live[static_cast<std::size_t>(c)]; }
  std::size_t peak_of(MemCategory c) const { return peak[static_cast<std::size_t>(c)]; }
};

/// Float-unit allocation counter. All methods are thread-safe; snapshots are consistent.
class MemoryLedger {
 public:
  void allocate(MemCategory c, std::size_t units);
  /// Throws std::logic_error on underflow.
  void release(MemCategory c, std::size_t units);
  MemorySnapshot snapshot() const;
  void reset();

 private:
  mutable std::mutex mu_;
  MemorySnapshot s_;
};

/// Scoped allocation: charged on construction, released on destruction. Null ledger is a no-op.
class LedgerLease {
 public:
  LedgerLease() = default;
  LedgerLease(MemoryLedger* ledger, MemCategory category, std::size_t units);
  LedgerLease(const LedgerLease&) = delete;
  LedgerLease& operator=(const LedgerLease&) = delete;
  LedgerLease(LedgerLease&& other) noexcept;
  LedgerLease& operator=(LedgerLease&& other) noexcept;
  ~LedgerLease();

  std::size_t units() const noexcept { return units_; }
  void reset();

 private:
  MemoryLedger* ledger_ = nullptr;
  MemCategory category_ = MemCategory::kParams;
  std::size_t units_ = 0;
};

}  // namespace bcdlab
