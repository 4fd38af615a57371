// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "lct/common.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {

using Shape = std::vector<Index>;

Index shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of Real with up to a handful of axes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real{0});
  Tensor(Shape shape, std::vector<Real> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  Index dim(std::size_t axis) const;
  Index numel() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  std::vector<Real>& storage() noexcept { return data_; }

  Real& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  /// Element access for rank-4 tensors.
  Real& at(Index a, Index b, Index c, Index d);
  Real at(Index a, Index b, Index c, Index d) const;

  Tensor reshape(Shape shape) const&;
  Tensor reshape(Shape shape) &&;

  void fill(Real value);
  void add_(const Tensor& other);
  void add_scaled_(const Tensor& other, Real scale);

  bool all_finite() const;
  Real max_abs() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

}  // namespace LCT_PRECISION_NS
}  // namespace lct
