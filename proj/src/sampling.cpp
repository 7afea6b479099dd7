#include "bcdlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bcdlab/rng.hpp"

namespace bcdlab {

std::size_t subsample_size(std::size_t n, double sr) {
  if (!(sr > 0.0 && sr <= 1.0)) throw std::invalid_argument("sample rate must be in (0, 1]");
  // tolerance keeps e.g. 0.29 * 100 at 29
  const auto k = static_cast<std::size_t>(std::floor(sr * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

std::vector<std::size_t> subsample(std::size_t n, double sr, std::uint64_t seed, std::uint64_t epoch) {
  const std::size_t keep = subsample_size(n, sr);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed, epoch));
  // partial Fisher-Yates: the first `keep` slots are a uniform sample in random order
  for (std::size_t i = 0; i < keep && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  return idx;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, double sr, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), sample_rate_(sr), seed_(seed) {
  if (n == 0) throw std::invalid_argument("dataset is empty");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  subsample_size(n, sr);
}

std::vector<std::size_t> BatchStream::next() {
  if (pos_ >= order_.size()) {
    order_ = subsample(n_, sample_rate_, seed_, epoch_);
    ++epoch_;
    pos_ = 0;
  }
  const std::size_t take = std::min(batch_size_, order_.size() - pos_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + take));
  pos_ += take;
  ++batches_;
  samples_ += take;
  return batch;
}

double BatchStream::epochs_consumed() const noexcept {
  return static_cast<double>(samples_) / static_cast<double>(subsample_size(n_, sample_rate_));
}

}  // namespace bcdlab
