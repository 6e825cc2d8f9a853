/*
 * tensor.hpp
 *
 * Flat row-major 64-bit tensor used by the network layers. Deliberately
 * minimal: the layers only need 1-D/2-D views and elementwise access.
 */

#pragma once

#include <cstddef>
#include <vector>

#include "battkit/types.hpp"

namespace battkit::nn {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> shape);

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  const double* row(std::size_t i) const { return data.data() + i * cols(); }
  double* row(std::size_t i) { return data.data() + i * cols(); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace battkit::nn
