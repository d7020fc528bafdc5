#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flaudit/errors.hpp"

namespace flaudit {

/// Dense row-major tensor of 64-bit floats.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<size_t> s, std::vector<double> v);
  static Tensor zeros(std::vector<size_t> shape);

  size_t size() const { return values.size(); }

  // 2-D access (matrix with shape {rows, cols})
  double at2(size_t r, size_t c) const { return values[r * shape[1] + c]; }
  double& at2(size_t r, size_t c) { return values[r * shape[1] + c]; }
  size_t rows() const { return shape[0]; }
  size_t cols() const { return shape[1]; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline size_t shape_product(std::span<const size_t> shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

// JSON fixture form: {"shape": [...], "values": [...]}
std::string tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const std::string& text);

}  // namespace flaudit
