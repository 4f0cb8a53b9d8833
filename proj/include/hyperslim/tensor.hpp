#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hyperslim {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer.
//
// Activations are always rank 4 (n, c, h, w). Parameters use the rank that
// fits them: conv kernels are rank 4, biases rank 1, compactor matrices
// rank 2.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-4 accessors. Throw ShapeError for other ranks.
  std::size_t n() const;
  std::size_t c() const;
  std::size_t h() const;
  std::size_t w() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h,
            std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  bool has_grad() const { return !grad_.empty() && grad_.size() == data_.size(); }
  // Allocates a zeroed gradient buffer if none exists.
  std::span<double> grad();
  std::span<const double> grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  // Reinterpret with a new shape of the same element count.
  Tensor reshaped(Shape shape) const;

  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
};

// Elementwise helpers used across the library and its tests.
double max_abs(std::span<const double> values);
// ||a - b||_inf / max(||b||_inf, tiny). Shapes must agree.
double max_relative_error(const Tensor& actual, const Tensor& expected);
bool bit_identical(const Tensor& a, const Tensor& b);

}  // namespace hyperslim
