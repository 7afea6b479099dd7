#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bcdlab::verify {

struct AcceptanceOptions {
  /// Holds configs/ and fixtures/.
  std::filesystem::path data_dir;
  /// Added to the fitted memory slope before the memory checks run (mutation testing).
  double table_coeff_delta = 0.0;
};

/// Bundled data directory of the source tree.
std::filesystem::path default_data_dir();

struct CheckResult {
  std::string id;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  std::string id;  // "AC1" ... "AC11"
  std::string title;
  double budget_seconds;  // 0 = no runtime bound
  CheckResult (*run)(const AcceptanceOptions&);
};

const std::vector<Criterion>& criteria();

/// Runs every criterion (or only the listed ids). An exception inside a check counts as a failure.
std::vector<CheckResult> run_acceptance(const AcceptanceOptions& options, const std::vector<std::string>& only = {});

/// "PASS AC4  memory formulas  ...detail... (0.01 s)".
std::string format_result(const CheckResult& r);

}  // namespace bcdlab::verify
