#include "sgrt/tensor.hpp"

namespace sgrt {

std::string Shape::str() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
}

Tensor tensor_filled(Shape shape, float value) { return Tensor(shape, value); }

void assert_shape(const Shape& actual, const Shape& expected) {
  if (actual != expected)
    throw ShapeError("shape mismatch: got " + actual.str() + ", expected " + expected.str());
}

}  // namespace sgrt
