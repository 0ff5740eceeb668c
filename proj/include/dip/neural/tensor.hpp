#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dip::nn {

using Shape = std::vector<std::size_t>;

/// SIMD-aligned storage. Eigen picks its reduction order from the buffer
/// alignment, so aligned buffers keep training bit-reproducible.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Elements per leading-axis slice (per sample for batched tensors).
  std::size_t stride0() const { return shape_.empty() || shape_[0] == 0 ? 0 : size() / shape_[0]; }

  /// Same values, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  AlignedBuffer values_;
};

}  // namespace dip::nn
