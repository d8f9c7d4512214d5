#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "eegnet/error.hpp"

namespace eegnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

inline constexpr std::size_t kTensorAlignment = 64;

// Storage for tensor data. Vectorized kernels pick different code paths for
// different alignments, so a fixed alignment keeps results reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kTensorAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kTensorAlignment}); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense row-major array. Scalar is float for training and double for the
// gradient-check shadow configuration.
template <class Scalar>
struct Tensor {
  Shape shape;
  AlignedVector<Scalar> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape_size(shape), Scalar{0}) {
    for (auto d : shape)
      if (d == 0) throw ConfigError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  Tensor(Shape s, const std::vector<Scalar>& values) : shape(std::move(s)), data(values.begin(), values.end()) {
    if (shape_size(shape) != data.size())
      throw ConfigError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                        shape_string(shape));
  }

  std::size_t size() const noexcept { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  Scalar* ptr() noexcept { return data.data(); }
  const Scalar* ptr() const noexcept { return data.data(); }
  std::span<Scalar> span() noexcept { return data; }
  std::span<const Scalar> span() const noexcept { return data; }

  Scalar& operator[](std::size_t i) noexcept { return data[i]; }
  const Scalar& operator[](std::size_t i) const noexcept { return data[i]; }

  std::vector<Scalar> values() const { return {data.begin(), data.end()}; }

  void fill(Scalar v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const noexcept {
    return std::all_of(data.begin(), data.end(), [](Scalar v) { return std::isfinite(v); });
  }

  template <class Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace eegnet
