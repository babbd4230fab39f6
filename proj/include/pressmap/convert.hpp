#pragma once

#include <Eigen/Core>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/tensor.hpp"

namespace pressmap {

inline Tensor to_tensor(const Eigen::VectorXd& v) {
  return Tensor({static_cast<std::size_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

inline Tensor to_tensor(const MatX3& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), 3}, std::vector<double>(m.data(), m.data() + m.size()));
}

inline Tensor to_tensor(const ImageArray& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::vector<double>(m.data(), m.data() + m.size()));
}

inline Eigen::VectorXd to_vector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.size()));
}

// Rank-2 tensor with 3 columns.
inline MatX3 to_matx3(const Tensor& t) {
  return Eigen::Map<const MatX3>(t.data.data(), static_cast<Eigen::Index>(t.dim(0)), 3);
}

}  // namespace pressmap
