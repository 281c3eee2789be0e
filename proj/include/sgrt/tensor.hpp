#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sgrt/errors.hpp"

namespace sgrt {

struct Shape {
  int height = 1;
  int width = 1;
  int channels = 1;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return pixels() * channels; }
  bool valid() const { return height >= 1 && width >= 1 && channels >= 1; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense height x width x channels array, row-major with channels innermost.
/// Element (y, x, c) lives at offset (y * width + x) * channels + c.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T value = T(0)) : shape_(shape) {
    if (!shape.valid()) throw PreconditionError("tensor shape must be positive, got " + shape.str());
    data_.assign(shape.size(), value);
  }
  BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (!shape.valid()) throw PreconditionError("tensor shape must be positive, got " + shape.str());
    if (data_.size() != shape.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape.str());
  }

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * shape_.width + x) * shape_.channels + c;
  }
  T& at(int y, int x, int c) { return data_[offset(y, x, c)]; }
  const T& at(int y, int x, int c) const { return data_[offset(y, x, c)]; }

  T* pixel(int y, int x) { return data_.data() + offset(y, x, 0); }
  const T* pixel(int y, int x) const { return data_.data() + offset(y, x, 0); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_{};
  std::vector<T> data_ = std::vector<T>(1, T(0));
};

using Tensor = BasicTensor<float>;

/// Minibatch of same-shaped tensors.
template <typename T>
using BasicBatch = std::vector<BasicTensor<T>>;
using Batch = BasicBatch<float>;

Tensor tensor_filled(Shape shape, float value);

template <typename T, typename F>
BasicTensor<T> map_elementwise(const BasicTensor<T>& t, F&& f) {
  BasicTensor<T> out = t;
  for (auto& v : out.values()) v = f(v);
  return out;
}

void assert_shape(const Shape& actual, const Shape& expected);

template <typename T>
void assert_shape(const BasicTensor<T>& t, const Shape& expected) {
  assert_shape(t.shape(), expected);
}

/// Checks that a batch is non-empty and uniformly shaped; returns the shared shape.
template <typename T>
Shape batch_shape(const BasicBatch<T>& batch) {
  if (batch.empty()) throw PreconditionError("batch must not be empty");
  const Shape s = batch.front().shape();
  for (const auto& t : batch) assert_shape(t, s);
  return s;
}

template <typename U, typename T>
BasicBatch<U> cast_batch(const BasicBatch<T>& batch) {
  BasicBatch<U> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(t.template cast<U>());
  return out;
}

}  // namespace sgrt
