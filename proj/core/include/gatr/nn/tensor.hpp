#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gatr/error.hpp"

namespace gatr::nn {

/// Dense row-major array with exactly four axes.
///
/// Activations use the layout [outer, items, channels, width]: `outer` is the
/// batch (samples, or samples x time in axial mode), width is 16 for multivector
/// batches and 1 for scalar batches. Weights reuse the same container.
template <class T>
class Tensor {
 public:
  using Shape = std::array<std::size_t, 4>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(count(shape), fill) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != count(shape_)) {
      throw ShapeError("Tensor: value count does not match shape");
    }
  }

  static std::size_t count(const Shape& s) { return s[0] * s[1] * s[2] * s[3]; }

  const Shape& shape() const { return shape_; }
  std::size_t dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  std::size_t offset(std::size_t a, std::size_t b, std::size_t c, std::size_t d = 0) const {
    return ((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
  }
  T& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d = 0) { return data_[offset(a, b, c, d)]; }
  const T& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d = 0) const {
    return data_[offset(a, b, c, d)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Same values, new shape with the same element count.
  Tensor reshaped(Shape shape) const {
    if (count(shape) != data_.size()) {
      throw ShapeError("Tensor::reshaped: element count changes");
    }
    return Tensor(shape, data_);
  }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> v(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) v[i] = static_cast<U>(data_[i]);
    return Tensor<U>(shape_, std::move(v));
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o, "Tensor::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  void require_same_shape(const Tensor& o, const char* where) const {
    if (o.shape_ != shape_) {
      throw ShapeError(std::string(where) + ": shape mismatch");
    }
  }

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

inline constexpr std::size_t kMvWidth = 16;

template <class T>
Tensor<T> mv_batch(std::size_t outer, std::size_t items, std::size_t channels) {
  return Tensor<T>({outer, items, channels, kMvWidth});
}

template <class T>
Tensor<T> scalar_batch(std::size_t outer, std::size_t items, std::size_t channels) {
  return Tensor<T>({outer, items, channels, 1});
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
T max_abs(const Tensor<T>& t) {
  T m = T(0);
  for (T v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

/// max |a - b|; shapes must match.
template <class T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same_shape(b, "max_abs_diff");
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace gatr::nn
