#include "forgerecon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "forgerecon/errors.hpp"

namespace forgerecon {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
  }
}

int Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) {
    throw ShapeError("accumulate shape mismatch " + shape_str(shape_) + " vs " + shape_str(other.shape_));
  }
  const double* src = other.data();
  double* dst = data();
  const std::size_t n = data_.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
  return *this;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor::min() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : data_) m = std::min(m, v);
  return m;
}

double Tensor::max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : data_) m = std::max(m, v);
  return m;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace forgerecon
