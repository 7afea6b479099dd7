#pragma once

#include <cstddef>
#include <vector>

#include "bcdlab/freeze_mask.hpp"
#include "bcdlab/model.hpp"

namespace bcdlab {

enum class SplitStrategy { kBalancedParams, kEqualLayers };

/// Half-open layer range [begin, end).
struct LayerRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t layer) const noexcept { return layer >= begin && layer < end; }
  friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

/// M contiguous, disjoint blocks covering every layer of a model.
struct Partition {
  std::vector<LayerRange> ranges;
  std::vector<std::size_t> param_counts;

  std::size_t block_count() const noexcept { return ranges.size(); }
  std::size_t layer_count() const noexcept { return ranges.empty() ? 0 : ranges.back().end; }
  std::size_t total_params() const noexcept;
  std::size_t block_of(std::size_t layer) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Splits at boundaries between parameterized layers. Parameter-free layers stay with the
/// preceding parameterized layer; leading ones join block 0 and the head joins the last block.
/// kBalancedParams minimizes the largest block (earliest cuts win ties); kEqualLayers splits the
/// parameterized layers into counts differing by at most one, larger blocks first.
Partition split_layers(const ModelSpec& model, std::size_t blocks, SplitStrategy strategy);

/// Same, from per-layer parameter counts directly.
Partition split_layers(const std::vector<std::size_t>& layer_params, std::size_t blocks, SplitStrategy strategy);

/// Exactly block `block` trainable; backward starts at its first layer.
FreezeMask mask_for(const Partition& partition, std::size_t block);

}  // namespace bcdlab
