#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bcdlab {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major float64 array. Most layers treat it as a [rows, cols] matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }

  /// Leading dimension; 1 for rank-0.
  std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_.front(); }
  /// Product of trailing dimensions.
  std::size_t cols() const noexcept { return rows() == 0 ? 0 : size() / rows(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) noexcept { return data().subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const noexcept { return data().subspan(r * cols(), cols()); }

  /// Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;
  void fill(double value) noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws NonFiniteError naming `where` when any entry is NaN/Inf.
void require_finite(const Tensor& t, const char* where);

}  // namespace bcdlab
