#pragma once

#include "sgrt/random.hpp"
#include "sgrt/tensor.hpp"

namespace sgrt::oracle {

template <typename T>
BasicTensor<T> random_normal(Shape s, Rng& rng) {
  BasicTensor<T> t(s);
  for (auto& v : t.values()) v = static_cast<T>(rng.normal());
  return t;
}

template <typename T>
BasicBatch<T> random_batch(std::size_t n, Shape s, Rng& rng) {
  BasicBatch<T> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(random_normal<T>(s, rng));
  return b;
}

template <typename T>
void fill_normal(std::vector<T>& v, Rng& rng, double scale = 1.0) {
  for (auto& x : v) x = static_cast<T>(scale * rng.normal());
}

/// Sum of elementwise products, used as a scalar probe loss for gradient checks.
template <typename T>
double dot(const BasicBatch<T>& a, const BasicBatch<T>& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    for (std::size_t i = 0; i < a[n].size(); ++i) s += static_cast<double>(a[n][i]) * b[n][i];
  return s;
}

}  // namespace sgrt::oracle
