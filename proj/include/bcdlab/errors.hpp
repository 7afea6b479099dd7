#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcdlab {

/// Tensor or layer shapes that do not compose.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf appeared in an activation, loss or parameter update.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training loss went non-finite while a block was being optimized.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t block, const std::string& what)
      : std::runtime_error("divergence in block " + std::to_string(block) + ": " + what), block_(block) {}

  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t block_;
};

/// A pre-inference cache was used after its frozen prefix changed.
class StaleCacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcdlab
