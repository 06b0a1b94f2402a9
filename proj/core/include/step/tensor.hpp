#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace step {

// Dense row-major tensor over double. 64-bit throughout: the gradient
// checks require it and the scale of this library does not justify a
// second dtype.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  // 1-d from literal values; a brace list on the shape constructor would bind
  // here instead, so literals get a named factory.
  static Tensor of(std::initializer_list<double> values);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // 2-d access; row-major.
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
  double* row(std::size_t r) { return values_.data() + r * shape_[1]; }
  const double* row(std::size_t r) const { return values_.data() + r * shape_[1]; }

  void fill(double value);
  void zero() { fill(0.0); }

  // this += other (shapes must match).
  void add(const Tensor& other);
  // this += scale * other.
  void add_scaled(const Tensor& other, double scale);
  void scale(double factor);

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::string shape_str() const;

  static std::size_t numel(const std::vector<std::size_t>& shape);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

}  // namespace step
