#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ulsa {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with a runtime shape.
///
/// The leading axis is the "slice" axis: a frame sequence is [T, ...frame],
/// a W-stack is [W, ...frame], a particle set is [N_p, W, ...frame].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Shape with the leading axis dropped.
  Shape slice_shape() const;
  std::size_t slice_size() const;
  std::size_t slice_count() const { return shape_.empty() ? 0 : shape_[0]; }

  Tensor slice(std::size_t i) const;
  void set_slice(std::size_t i, const Tensor& value);
  std::span<double> slice_values(std::size_t i);
  std::span<const double> slice_values(std::size_t i) const;

  /// Same values, new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);

  /// this += scale * other
  Tensor& add_scaled(const Tensor& other, double scale);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);
Tensor hadamard(const Tensor& a, const Tensor& b);

/// a*x + b*y, elementwise.
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);

/// Stack equally-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double sum(const Tensor& t);
double squared_norm(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ulsa
