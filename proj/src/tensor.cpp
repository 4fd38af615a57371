// SPDX-License-Identifier: Apache-2.0

#include "lct/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lct {
inline namespace LCT_PRECISION_NS {

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    check_shape(d >= 0, "negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)),
      data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_shape(static_cast<Index>(data_.size()) == shape_numel(shape_),
              "value count " + std::to_string(data_.size()) +
                  " does not match shape " + shape_str(shape_));
}

Index Tensor::dim(std::size_t axis) const {
  check_shape(axis < shape_.size(), "axis out of range for shape " + shape_str(shape_));
  return shape_[axis];
}

Real& Tensor::at(Index a, Index b, Index c, Index d) {
  return data_[static_cast<std::size_t>(((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
}

Real Tensor::at(Index a, Index b, Index c, Index d) const {
  return data_[static_cast<std::size_t>(((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
}

Tensor Tensor::reshape(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshape(std::move(shape));
}

Tensor Tensor::reshape(Shape shape) && {
  check_shape(shape_numel(shape) == numel(),
              "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_(const Tensor& other) {
  check_shape(other.numel() == numel(), "add_: size mismatch " + shape_str(shape_) +
                                            " vs " + shape_str(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::add_scaled_(const Tensor& other, Real scale) {
  check_shape(other.numel() == numel(), "add_scaled_: size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

Real Tensor::max_abs() const {
  Real m = 0;
  for (Real v : data_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace LCT_PRECISION_NS
}  // namespace lct
