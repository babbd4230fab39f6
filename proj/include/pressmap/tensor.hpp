#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace pressmap {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape);

// Over-aligned so vectorized kernels take the same code path on every run.
using TensorStorage = std::vector<double, Eigen::aligned_allocator<double>>;

// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  TensorStorage data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<double> values);

  static Tensor vector(std::span<const double> values) {
    return Tensor({values.size()}, std::vector<double>(values.begin(), values.end()));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // 2D access; tensor must be rank 2.
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  // 3D access for channel-major feature maps [C x H x W].
  double& at(std::size_t ch, std::size_t r, std::size_t c) {
    return data[(ch * shape[1] + r) * shape[2] + c];
  }
  double at(std::size_t ch, std::size_t r, std::size_t c) const {
    return data[(ch * shape[1] + r) * shape[2] + c];
  }

  std::span<double> values() { return data; }
  std::span<const double> values() const { return data; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace pressmap
