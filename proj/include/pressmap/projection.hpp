#pragma once

#include <Eigen/Core>
#include <optional>

#include "pressmap/body_model.hpp"

namespace pressmap {

using ImageArray = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Regular grid in the bed plane. Rows run along world Y, columns along world X;
// origin is the world position of the (0,0) cell corner.
struct ImageGeometry {
  int rows = 0;
  int cols = 0;
  double pitch = 0.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  double cell_area() const { return pitch * pitch; }
  bool operator==(const ImageGeometry&) const = default;
};

struct Taxel {
  int row = 0;
  int col = 0;
  bool operator==(const Taxel&) const = default;
};

// Sensed mat pressure in kPa.
struct PressureImage {
  ImageGeometry geom;
  ImageArray values;
};

// Overhead depth in meters from the camera plane; kNoReturn marks missing pixels.
struct DepthImage {
  static constexpr double kNoReturn = -1.0;

  ImageGeometry geom;
  ImageArray values;
};

using VertexPressureMap = Eigen::VectorXd;
using VertexContact = Eigen::VectorXd;  // entries in {0, 1}

inline constexpr double kDefaultContactEps = 0.01;

// Throws ConfigInvalid for non-positive dims or pitch.
void validate(const ImageGeometry& geom);

// Half-open binning; nullopt outside the grid.
std::optional<Taxel> taxel_of_point(const Eigen::Vector2d& xy, const ImageGeometry& geom);

// Per-vertex taxel index (row * cols + col), or -1 outside the grid.
Eigen::VectorXi bin_vertices(const MatX3& vertices, const ImageGeometry& geom);

// Each vertex at or below z_eps inherits the kPa value of its taxel.
VertexPressureMap project_gt(const PressureImage& img, const PosedMesh& mesh,
                             double z_eps = kDefaultContactEps);

// Throws NegativePressure on negative entries.
VertexContact contact_from_pressure(const VertexPressureMap& vpm);

// Mean vertex pressure per taxel over every vertex binned there; empty taxels are 0.
PressureImage reproject_2d(const VertexPressureMap& vpm, const PosedMesh& mesh, const ImageGeometry& geom);

// Adjoint of reproject_2d with respect to vpm; the mesh is held fixed.
VertexPressureMap reproject_2d_vjp(const ImageArray& upstream, const PosedMesh& mesh, const ImageGeometry& geom);

}  // namespace pressmap
