#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/tensor.hpp"

namespace pressmap {

struct FimToggles {
  bool use_xyz = true;
  bool use_image = true;
  bool use_latent = true;
  bool use_global = true;

  bool any() const { return use_xyz || use_image || use_latent || use_global; }
  // Compact label such as "xyz+image+latent+global".
  std::string label() const;
  // Inverse of label(); throws ConfigInvalid on unknown names or an empty set.
  static FimToggles parse(const std::string& label);
  bool operator==(const FimToggles&) const = default;
};

// All 15 non-empty toggle subsets in a fixed order.
std::vector<FimToggles> all_toggle_subsets();

struct FeatureGroup {
  std::string name;
  int width = 0;
};

struct VertexFeatureMatrix {
  Eigen::MatrixXd features;  // N_v x D
  std::vector<FeatureGroup> layout;
};

// Per-vertex (row, col) pixel, binned like taxels and clamped into the grid.
Eigen::MatrixX2i register_vertices(const MatX3& vertices, const ImageGeometry& geom);
inline Eigen::MatrixX2i register_vertices(const PosedMesh& mesh, const ImageGeometry& geom) {
  return register_vertices(mesh.vertices, geom);
}

// feature_map [C x H x W] -> [N_v x C]. Throws IndexOutOfRange on unclamped indices.
Eigen::MatrixXd gather(const Tensor& feature_map, const Eigen::MatrixX2i& pix);
// Scatter-add adjoint of gather into a map shaped like `map_shape`.
Tensor gather_vjp(const Eigen::MatrixXd& upstream, const Eigen::MatrixX2i& pix, const Shape& map_shape);

// Concatenates enabled per-vertex groups in the order xyz, image, latent.
// The global group is fused by the network, so it contributes no columns here.
// Throws NoFeaturesEnabled when every toggle is off, DimensionMismatch when an
// enabled group is missing or has the wrong row count.
VertexFeatureMatrix fuse(const PosedMesh& mesh, const std::optional<Eigen::MatrixXd>& gathered_image,
                         const std::optional<Eigen::MatrixXd>& gathered_latent, const FimToggles& toggles);

}  // namespace pressmap
