#include "bcdlab/memory.hpp"

#include <algorithm>
#include <sstream>
#include <utility>
#include <stdexcept>

#include "bcdlab/report.hpp"

namespace bcdlab {

void MemoryModel::validate() const {
  if (!(unfrozen > 0.0 && unfrozen <= 1.0)) throw std::invalid_argument("unfrozen fraction must be in (0, 1]");
  if (!(activation_coeff >= 0.0)) throw std::invalid_argument("activation coefficient must be >= 0");
  if (!(params >= 0.0)) throw std::invalid_argument("parameter units must be >= 0");
  if (table_coeff && !(*table_coeff >= 0.0)) throw std::invalid_argument("table coefficient must be >= 0");
}

double table_coefficient(OptimKind kind) { return kind == OptimKind::kAdam ? 3.0 : 2.0; }

double predict(const MemoryModel& m) {
  m.validate();
  const double p = m.params, u = m.unfrozen;
  if (m.mode == MemoryMode::kTable) return p * (1.0 + m.table_coeff.value_or(table_coefficient(m.optimizer)) * u);
  const double state = m.optimizer == OptimKind::kAdam ? 3.0 : 1.0;
  const double activations = m.recompute ? 0.0 : m.activation_coeff * p;
  return p * (1.0 + u + state * u) + activations;
}

std::vector<UfpRow> ufp_table(double params, OptimKind optimizer, const std::vector<double>& unfrozen,
                              std::optional<double> table_coeff) {
  std::vector<UfpRow> rows;
  for (double u : unfrozen) {
    MemoryModel m;
    m.mode = MemoryMode::kTable;
    m.params = params;
    m.unfrozen = u;
    m.optimizer = optimizer;
    m.table_coeff = table_coeff;
    rows.push_back({u, predict(m)});
  }
  return rows;
}

std::string ufp_table_csv(const std::vector<UfpRow>& rows, OptimKind optimizer, std::string_view unit) {
  std::ostringstream out;
  out << "ufp,optimizer,memory_" << unit << "\n";
  for (const auto& r : rows) {
    out << format_double(r.unfrozen) << "," << (optimizer == OptimKind::kAdam ? "adam" : "sgd") << ","
        << format_fixed(r.units, 2) << "\n";
  }
  return out.str();
}

std::string_view category_name(MemCategory c) {
  switch (c) {
    case MemCategory::kParams: return "params";
    case MemCategory::kGrads: return "grads";
    case MemCategory::kOptimizerState: return "optimizer_state";
    case MemCategory::kActivations: return "activations";
    case MemCategory::kCache: return "cache";
  }
  return "?";
}

void MemoryLedger::allocate(MemCategory c, std::size_t units) {
  std::lock_guard lock(mu_);
  const auto i = static_cast<std::size_t>(c);
  s_.live[i] += units;
  s_.live_total += units;
  s_.peak[i] = std::max(s_.peak[i], s_.live[i]);
  s_.peak_total = std::max(s_.peak_total, s_.live_total);
  const std::size_t model_state = s_.live[0] + s_.live[1] + s_.live[2];
  s_.peak_model_state = std::max(s_.peak_model_state, model_state);
}

void MemoryLedger::release(MemCategory c, std::size_t units) {
  std::lock_guard lock(mu_);
  const auto i = static_cast<std::size_t>(c);
  if (s_.live[i] < units) {
    throw std::logic_error("memory ledger underflow in category " + std::string(category_name(c)));
  }
  s_.live[i] -= units;
  s_.live_total -= units;
}

MemorySnapshot MemoryLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return s_;
}

void MemoryLedger::reset() {
  std::lock_guard lock(mu_);
  s_ = MemorySnapshot{};
}

LedgerLease::LedgerLease(MemoryLedger* ledger, MemCategory category, std::size_t units)
    : ledger_(ledger), category_(category), units_(units) {
  if (ledger_) ledger_->allocate(category_, units_);
}

LedgerLease::LedgerLease(LedgerLease&& other) noexcept
    : ledger_(std::exchange(other.ledger_, nullptr)), category_(other.category_), units_(std::exchange(other.units_, 0)) {}

LedgerLease& LedgerLease::operator=(LedgerLease&& other) noexcept {
  if (this != &other) {
    reset();
    ledger_ = std::exchange(other.ledger_, nullptr);
    category_ = other.category_;
    units_ = std::exchange(other.units_, 0);
  }
  return *this;
}

LedgerLease::~LedgerLease() { reset(); }

void LedgerLease::reset() {
  if (ledger_ && units_ > 0) ledger_->release(category_, units_);
  ledger_ = nullptr;
  units_ = 0;
}

}  // namespace bcdlab
