#pragma once

#include <cassert>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "hopman/common.hpp"
#include "hopman/rng.hpp"

namespace hopman::nn {

// Dense row-major tensor. Always contiguous; views are not supported, ops copy.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(size_t(count(shape)), T(0)) {}

  static i64 count(const std::vector<int>& s) {
    i64 n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, T value) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), value);
    return t;
  }

  static Tensor randn(std::vector<int> s, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(s));
    rng.fill_normal(t.v.data(), t.numel(), scale);
    return t;
  }

  i64 numel() const { return i64(v.size()); }
  int ndim() const { return int(shape.size()); }
  int dim(int i) const { return shape[size_t(i)]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  Tensor reshaped(std::vector<int> s) const {
    if (count(s) != numel()) throw NumericError("reshape: element count mismatch");
    Tensor t;
    t.shape = std::move(s);
    t.v = v;
    return t;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <typename T>
bool has_nonfinite(const Tensor<T>& t) {
  for (T x : t.v)
    if (!std::isfinite(double(x))) return true;
  return false;
}

}  // namespace hopman::nn
