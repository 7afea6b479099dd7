#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bcdlab {

/// floor(sr*n) distinct indices drawn uniformly without replacement, in shuffled order.
/// Each epoch uses its own stream derived from (seed, epoch).
std::vector<std::size_t> subsample(std::size_t n, double sample_rate, std::uint64_t seed, std::uint64_t epoch);

/// Number of samples subsample() keeps.
std::size_t subsample_size(std::size_t n, double sample_rate);

/// Endless mini-batch index stream. An epoch is one pass over a fresh subsample; the last
/// batch of an epoch may be short.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, double sample_rate, std::uint64_t seed);

  std::vector<std::size_t> next();

  /// Epochs begun so far (the epoch of the most recent batch is counted).
  std::uint64_t epochs_started() const noexcept { return epoch_; }
  std::uint64_t batches_drawn() const noexcept { return batches_; }
  /// Samples consumed divided by epoch length.
  double epochs_consumed() const noexcept;

 private:
  std::size_t n_;
  std::size_t batch_size_;
  double sample_rate_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::uint64_t batches_ = 0;
  std::uint64_t samples_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace bcdlab
