#pragma once

#include <cstddef>
#include <vector>

namespace bcdlab {

/// Per-layer trainability for one block visit. Freezing is whole-layer only.
struct FreezeMask {
  std::size_t trainable_block = 0;
  std::vector<bool> layer_trainable;
  /// First layer whose input activation must be kept for backward.
  std::size_t backward_start = 0;

  static FreezeMask all_trainable(std::size_t layer_count) {
    return FreezeMask{0, std::vector<bool>(layer_count, true), 0};
  }

  std::size_t layer_count() const noexcept { return layer_trainable.size(); }

  /// Index of the first trainable layer, or layer_count() when none is.
  std::size_t first_trainable() const noexcept {
    for (std::size_t i = 0; i < layer_trainable.size(); ++i) {
      if (layer_trainable[i]) return i;
    }
    return layer_trainable.size();
  }

  friend bool operator==(const FreezeMask&, const FreezeMask&) = default;
};

}  // namespace bcdlab
