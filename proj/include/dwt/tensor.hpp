#ifndef DWT_TENSOR_HPP
#define DWT_TENSOR_HPP

#include <cstddef>
#include <vector>

#include "dwt/errors.hpp"

namespace dwt {

// Dense row-major n-dimensional array of 64-bit floats. The universal value
// type of the library: vectors are rank-1, matrices rank-2, image batches
// rank-4 (n, c, h, w).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor identity(std::size_t n);

  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const;

  // Rank-2 accessors; throw ShapeError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;
  double& operator()(std::size_t i, std::size_t j);
  double operator()(std::size_t i, std::size_t j) const;

  // Rank-4 accessors (n, c, h, w).
  double& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x);
  double operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const;

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Tensor reshaped(std::vector<std::size_t> new_shape) const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);
  void fill(double v);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);

// Elementwise product; shapes must match.
Tensor hadamard(const Tensor& a, const Tensor& b);

double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);

// Learnable value with its gradient accumulator. grad always mirrors the
// value's shape. gamma/beta of normalization layers set weight_decay_exempt.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool weight_decay_exempt = false;

  Parameter() = default;
  explicit Parameter(Tensor v, bool exempt = false)
      : value(std::move(v)), grad(value.shape()), weight_decay_exempt(exempt) {}

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace dwt

#endif  // DWT_TENSOR_HPP
