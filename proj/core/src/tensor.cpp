#include "ulsa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ulsa/errors.hpp"

namespace ulsa {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  ULSA_REQUIRE(values_.size() == shape_size(shape_),
               "tensor: value count " + std::to_string(values_.size()) +
                   " does not match shape " + shape_string(shape_));
}

Shape Tensor::slice_shape() const {
  ULSA_REQUIRE(!shape_.empty(), "tensor: cannot slice a rank-0 tensor");
  return Shape(shape_.begin() + 1, shape_.end());
}

std::size_t Tensor::slice_size() const { return shape_size(slice_shape()); }

Tensor Tensor::slice(std::size_t i) const {
  auto v = slice_values(i);
  return Tensor(slice_shape(), std::vector<double>(v.begin(), v.end()));
}

void Tensor::set_slice(std::size_t i, const Tensor& value) {
  ULSA_REQUIRE(value.shape() == slice_shape(),
               "tensor: slice shape " + shape_string(value.shape()) +
                   " does not match " + shape_string(slice_shape()));
  auto dst = slice_values(i);
  std::copy(value.values().begin(), value.values().end(), dst.begin());
}

std::span<double> Tensor::slice_values(std::size_t i) {
  ULSA_REQUIRE(i < slice_count(), "tensor: slice index out of range");
  const std::size_t n = slice_size();
  return std::span<double>(values_).subspan(i * n, n);
}

std::span<const double> Tensor::slice_values(std::size_t i) const {
  ULSA_REQUIRE(i < slice_count(), "tensor: slice index out of range");
  const std::size_t n = slice_size();
  return std::span<const double>(values_).subspan(i * n, n);
}

Tensor Tensor::reshaped(Shape shape) const {
  ULSA_REQUIRE(shape_size(shape) == size(),
               "tensor: cannot reshape " + shape_string(shape_) + " to " +
                   shape_string(shape));
  return Tensor(std::move(shape), values_);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

Tensor& Tensor::add_scaled(const Tensor& other, double scale) {
  require_same_shape(*this, other, "tensor add_scaled");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other[i];
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
  require_same_shape(x, y, "axpby");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

Tensor stack(const std::vector<Tensor>& parts) {
  ULSA_REQUIRE(!parts.empty(), "stack: no parts");
  Shape shape = parts.front().shape();
  shape.insert(shape.begin(), parts.size());
  Tensor out(shape);
  for (std::size_t i = 0; i < parts.size(); ++i) out.set_slice(i, parts[i]);
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw InvalidInput(std::string(what) + ": shape mismatch " +
                       shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
  }
}

double sum(const Tensor& t) {
  return std::accumulate(t.values().begin(), t.values().end(), 0.0);
}

double squared_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ulsa
