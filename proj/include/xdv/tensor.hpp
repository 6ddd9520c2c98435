// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace xdv {

/// Extents of a dense tensor, rank 0 through 4. Every extent is positive.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  std::size_t elements() const;
  std::span<const std::size_t> dims() const { return {dims_.data(), rank_}; }

  bool operator==(const Shape& other) const;
  std::string to_string() const;

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// The gradient is an accumulator attached to the tensor rather than part of
/// its value, so it stays writable through const references: a parameter can
/// be read by a forward pass and receive its gradient afterwards.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t size() const { return data_.size(); }

  // Matrix view used by the tape operations: rank 0 is 1x1, rank 1 is 1xn.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  std::span<double> grad() const;
  void zero_grad() const;

  bool all_finite() const;
  /// Same extents, same rank.
  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
  mutable std::vector<double> grad_;
};

/// A parameter tensor under its canonical name.
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

/// Bitwise equality of shape and values.
bool identical(const Tensor& a, const Tensor& b);

/// Largest absolute elementwise difference; throws DimensionError on shape mismatch.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace xdv
