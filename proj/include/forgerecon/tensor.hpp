#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace forgerecon {

using Shape = std::vector<int>;

// Eigen's small-product kernels round differently depending on operand
// alignment. Fixing every buffer to a cache-line boundary makes results a
// function of shapes alone, not of where the heap placed them.
inline constexpr std::size_t kBufferAlignment = 64;

template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kBufferAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kBufferAlignment}); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array of doubles. Image-like data uses (batch, channel,
// height, width); matrices batched for graph reasoning use (batch, rows, cols).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  AlignedBuffer& storage() { return data_; }
  const AlignedBuffer& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-4 element access.
  double& at(int b, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(int b, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  Tensor reshaped(Shape shape) const;
  void fill(double value);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // In-place accumulate; shapes must agree.
  Tensor& operator+=(const Tensor& other);

  double sum() const;
  double max_abs() const;
  double min() const;
  double max() const;

 private:
  Shape shape_;
  AlignedBuffer data_;
};

bool bit_identical(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace forgerecon
