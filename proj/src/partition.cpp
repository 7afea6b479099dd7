#include "bcdlab/partition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bcdlab {
namespace {

// Fewest contiguous groups with sums <= cap, or SIZE_MAX when a single weight exceeds it.
std::size_t min_groups(const std::vector<std::size_t>& w, std::size_t from, std::size_t cap) {
  std::size_t groups = 0, acc = 0;
  for (std::size_t j = from; j < w.size(); ++j) {
    if (w[j] > cap) return std::numeric_limits<std::size_t>::max();
    if (groups == 0 || acc + w[j] > cap) {
      ++groups;
      acc = 0;
    }
    acc += w[j];
  }
  return groups;
}

// Optimal min-max group sum over contiguous splits of w into exactly m non-empty groups.
std::size_t minmax_value(const std::vector<std::size_t>& w, std::size_t m) {
  const std::size_t k = w.size();
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> prefix(k + 1, 0);
  for (std::size_t j = 0; j < k; ++j) prefix[j + 1] = prefix[j] + w[j];
  // best[g][j]: first j units in g groups
  std::vector<std::vector<std::size_t>> best(m + 1, std::vector<std::size_t>(k + 1, kInf));
  best[0][0] = 0;
  for (std::size_t g = 1; g <= m; ++g) {
    for (std::size_t j = g; j <= k; ++j) {
      for (std::size_t i = g - 1; i < j; ++i) {
        if (best[g - 1][i] == kInf) continue;
        best[g][j] = std::min(best[g][j], std::max(best[g - 1][i], prefix[j] - prefix[i]));
      }
    }
  }
  return best[m][k];
}

// Unit counts per group.
std::vector<std::size_t> balanced_groups(const std::vector<std::size_t>& w, std::size_t m) {
  const std::size_t cap = minmax_value(w, m);
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  for (std::size_t b = 0; b + 1 < m; ++b) {
    const std::size_t remaining_blocks = m - b - 1;
    std::size_t acc = 0;
    std::size_t chosen = 0;
    for (std::size_t e = start + 1; e + remaining_blocks <= w.size(); ++e) {
      acc += w[e - 1];
      if (acc > cap) break;
      if (min_groups(w, e, cap) <= remaining_blocks) {
        chosen = e;
        break;
      }
    }
    if (chosen == 0) throw std::logic_error("balanced split found no feasible cut");
    sizes.push_back(chosen - start);
    start = chosen;
  }
  sizes.push_back(w.size() - start);
  return sizes;
}

}  // namespace

std::size_t Partition::total_params() const noexcept {
  return std::accumulate(param_counts.begin(), param_counts.end(), std::size_t{0});
}

std::size_t Partition::block_of(std::size_t layer) const {
  for (std::size_t b = 0; b < ranges.size(); ++b) {
    if (ranges[b].contains(layer)) return b;
  }
  throw std::out_of_range("layer " + std::to_string(layer) + " outside partition");
}

Partition split_layers(const std::vector<std::size_t>& layer_params, std::size_t blocks, SplitStrategy strategy) {
  std::vector<std::size_t> units;  // layer indices of parameterized layers
  std::vector<std::size_t> weights;
  for (std::size_t i = 0; i < layer_params.size(); ++i) {
    if (layer_params[i] > 0) {
      units.push_back(i);
      weights.push_back(layer_params[i]);
    }
  }
  if (blocks < 1 || blocks > units.size()) {
    throw std::invalid_argument("block count " + std::to_string(blocks) + " must be in [1, " +
                                std::to_string(units.size()) + "] (parameterized layers)");
  }

  std::vector<std::size_t> group_sizes;
  if (strategy == SplitStrategy::kBalancedParams) {
    group_sizes = balanced_groups(weights, blocks);
  } else {
    const std::size_t base = units.size() / blocks, extra = units.size() % blocks;
    for (std::size_t b = 0; b < blocks; ++b) group_sizes.push_back(base + (b < extra ? 1 : 0));
  }

  Partition p;
  std::size_t unit = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b == 0 ? 0 : units[unit];
    std::size_t params = 0;
    for (std::size_t j = 0; j < group_sizes[b]; ++j) params += weights[unit + j];
    unit += group_sizes[b];
    const std::size_t end = b + 1 == blocks ? layer_params.size() : units[unit];
    p.ranges.push_back({begin, end});
    p.param_counts.push_back(params);
  }
  return p;
}

Partition split_layers(const ModelSpec& model, std::size_t blocks, SplitStrategy strategy) {
  std::vector<std::size_t> counts;
  for (const auto& l : model.layers) counts.push_back(param_count(l));
  return split_layers(counts, blocks, strategy);
}

FreezeMask mask_for(const Partition& partition, std::size_t block) {
  if (block >= partition.block_count()) {
    throw std::out_of_range("block " + std::to_string(block) + " out of range for " +
                            std::to_string(partition.block_count()) + " blocks");
  }
  const auto& r = partition.ranges[block];
  FreezeMask mask;
  mask.trainable_block = block;
  mask.layer_trainable.assign(partition.layer_count(), false);
  for (std::size_t i = r.begin; i < r.end; ++i) mask.layer_trainable[i] = true;
  mask.backward_start = r.begin;
  return mask;
}

}  // namespace bcdlab
