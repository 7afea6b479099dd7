#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "bcdlab/train_step.hpp"

namespace bcdlab {

/// Frozen-prefix outputs for every sample, so training can enter the model at `prefix_end`.
/// A passthrough cache (prefix_end == 0) holds nothing and routes steps to the uncached path.
struct ActivationCache {
  std::size_t prefix_end = 0;
  std::size_t rows_per_sample = 1;
  std::size_t samples = 0;
  Tensor activations;  // [samples * rows_per_sample, width]
  std::uint64_t prefix_checksum = 0;
  /// Forward float operations spent building the cache.
  std::uint64_t build_cost = 0;

  bool passthrough() const noexcept { return prefix_end == 0; }
  std::size_t entry_count() const noexcept { return samples; }
  Tensor entry(std::size_t sample) const;
  std::size_t float_units() const noexcept { return activations.size(); }
};

/// FNV-1a digest over the shapes and bit patterns of layers [0, prefix_end).
std::uint64_t prefix_checksum(const ParamSet& params, std::size_t prefix_end);

ActivationCache build_cache(const ModelSpec& model, const ParamSet& params, const Dataset& data,
                            std::size_t prefix_end);

bool cache_valid(const ActivationCache& cache, const ParamSet& params);

/// One optimizer step fed from the cache. Bitwise identical to train_step on the same batch.
/// Throws StaleCacheError when the prefix changed since the build.
StepResult train_step_cached(const ModelSpec& model, ParamSet& params, const ActivationCache& cache,
                             const Dataset& data, std::span<const std::size_t> batch, const FreezeMask& mask,
                             OptimState& state, const OptimHyper& hyper, OpCounter* ops = nullptr,
                             MemoryLedger* ledger = nullptr);

/// Binary spill: magic "BCDACT01", then little-endian u64 samples, rows_per_sample, rank, dims...,
/// prefix_end, checksum, build_cost, followed by float64 data.
void save_cache(const ActivationCache& cache, const std::filesystem::path& path);
ActivationCache load_cache(const std::filesystem::path& path);

}  // namespace bcdlab
