#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qgen/common.hpp"

namespace qgen::nn {

// Dense row-major tensor of doubles. All training and gradient checking run
// at 64-bit; checkpoints store values as 32-bit IEEE-754 little endian.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
    if (numel_of(shape) != static_cast<int64_t>(v.size()))
      throw DataError("tensor: value count does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw DataError("tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    Tensor t;
    t.shape = std::move(s);
    t.v.assign(static_cast<size_t>(numel_of(t.shape)), 0.0);
    return t;
  }

  static Tensor vec(std::vector<double> data) {
    Tensor t;
    t.shape = {static_cast<int>(data.size())};
    t.v = std::move(data);
    return t;
  }

  static Tensor scalar(double x) { return vec({x}); }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }

  double& at(int i) { return v[static_cast<size_t>(i)]; }
  double at(int i) const { return v[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

}  // namespace qgen::nn
