#include "hyperslim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "hyperslim/error.hpp"

namespace hyperslim {

std::size_t shape_numel(const Shape& shape) {
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  return count;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("Tensor", "element count", shape_numel(shape_),
                     data_.size());
  }
}

namespace {
void require_rank4(const Shape& shape) {
  if (shape.size() != 4) throw ShapeError("Tensor", "rank", 4, shape.size());
}
}  // namespace

std::size_t Tensor::n() const { require_rank4(shape_); return shape_[0]; }
std::size_t Tensor::c() const { require_rank4(shape_); return shape_[1]; }
std::size_t Tensor::h() const { require_rank4(shape_); return shape_[2]; }
std::size_t Tensor::w() const { require_rank4(shape_); return shape_[3]; }

std::span<double> Tensor::grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("reshape", "element count", data_.size(),
                     shape_numel(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double max_relative_error(const Tensor& actual, const Tensor& expected) {
  if (actual.shape() != expected.shape()) {
    throw ValidationError("max_relative_error: shape " +
                          shape_to_string(actual.shape()) + " vs " +
                          shape_to_string(expected.shape()));
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < actual.numel(); ++i) {
    diff = std::max(diff, std::abs(actual[i] - expected[i]));
  }
  const double scale =
      std::max(max_abs(expected.data()), std::numeric_limits<double>::min());
  return diff / scale;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         (a.numel() == 0 ||
          std::memcmp(a.data().data(), b.data().data(),
                      a.numel() * sizeof(double)) == 0);
}

}  // namespace hyperslim
