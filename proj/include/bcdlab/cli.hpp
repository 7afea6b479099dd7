#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bcdlab/config.hpp"

namespace bcdlab::cli {

inline constexpr int kExitOk = 0;
/// Schema, usage or input errors.
inline constexpr int kExitUsage = 1;
/// Training diverged (non-finite loss or update).
inline constexpr int kExitDivergence = 2;

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Summary written by `train`.
Json train_summary(const ExperimentConfig& cfg, const TrainResult& result, std::size_t samples);

}  // namespace bcdlab::cli
