#include "pressmap/projection.hpp"

#include <cmath>

#include "pressmap/error.hpp"

namespace pressmap {

void validate(const ImageGeometry& geom) {
  if (geom.rows <= 0 || geom.cols <= 0) throw Error(ErrorCode::ConfigInvalid, "image dims must be positive");
  if (!(geom.pitch > 0.0)) throw Error(ErrorCode::ConfigInvalid, "pitch must be positive");
}

std::optional<Taxel> taxel_of_point(const Eigen::Vector2d& xy, const ImageGeometry& geom) {
  const double c = std::floor((xy.x() - geom.origin.x()) / geom.pitch);
  const double r = std::floor((xy.y() - geom.origin.y()) / geom.pitch);
  if (!(r >= 0 && c >= 0 && r < geom.rows && c < geom.cols)) return std::nullopt;
  return Taxel{static_cast<int>(r), static_cast<int>(c)};
}

Eigen::VectorXi bin_vertices(const MatX3& vertices, const ImageGeometry& geom) {
  Eigen::VectorXi bins(vertices.rows());
  for (Eigen::Index v = 0; v < vertices.rows(); ++v) {
    const auto t = taxel_of_point({vertices(v, 0), vertices(v, 1)}, geom);
    bins[v] = t ? t->row * geom.cols + t->col : -1;
  }
  return bins;
}

VertexPressureMap project_gt(const PressureImage& img, const PosedMesh& mesh, double z_eps) {
  if (img.values.rows() != img.geom.rows || img.values.cols() != img.geom.cols) {
    throw Error(ErrorCode::GeometryMismatch, "pressure values do not match their geometry");
  }
  VertexPressureMap out = VertexPressureMap::Zero(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertices(v, 2) > z_eps) continue;
    if (const auto t = taxel_of_point({mesh.vertices(v, 0), mesh.vertices(v, 1)}, img.geom)) {
      out[v] = img.values(t->row, t->col);
    }
  }
  return out;
}

VertexContact contact_from_pressure(const VertexPressureMap& vpm) {
  VertexContact out(vpm.size());
  for (Eigen::Index v = 0; v < vpm.size(); ++v) {
    if (vpm[v] < 0.0) throw Error(ErrorCode::NegativePressure, "vertex " + std::to_string(v));
    out[v] = vpm[v] > 0.0 ? 1.0 : 0.0;
  }
  return out;
}

PressureImage reproject_2d(const VertexPressureMap& vpm, const PosedMesh& mesh, const ImageGeometry& geom) {
  if (vpm.size() != mesh.num_vertices()) {
    throw Error(ErrorCode::DimensionMismatch, "pressure map and mesh vertex counts differ");
  }
  const Eigen::VectorXi bins = bin_vertices(mesh.vertices, geom);
  PressureImage img{geom, ImageArray::Zero(geom.rows, geom.cols)};
  Eigen::VectorXi count = Eigen::VectorXi::Zero(geom.rows * geom.cols);
  for (Eigen::Index v = 0; v < vpm.size(); ++v) {
    if (bins[v] < 0) continue;
    img.values.data()[bins[v]] += vpm[v];
    ++count[bins[v]];
  }
  for (Eigen::Index i = 0; i < count.size(); ++i) {
    if (count[i] > 0) img.values.data()[i] /= count[i];
  }
  return img;
}

VertexPressureMap reproject_2d_vjp(const ImageArray& upstream, const PosedMesh& mesh, const ImageGeometry& geom) {
  if (upstream.rows() != geom.rows || upstream.cols() != geom.cols) {
    throw Error(ErrorCode::GeometryMismatch, "upstream gradient does not match the geometry");
  }
  const Eigen::VectorXi bins = bin_vertices(mesh.vertices, geom);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(geom.rows * geom.cols);
  for (Eigen::Index v = 0; v < bins.size(); ++v) {
    if (bins[v] >= 0) ++count[bins[v]];
  }
  VertexPressureMap grad = VertexPressureMap::Zero(mesh.num_vertices());
  for (Eigen::Index v = 0; v < bins.size(); ++v) {
    if (bins[v] >= 0) grad[v] = upstream.data()[bins[v]] / count[bins[v]];
  }
  return grad;
}

}  // namespace pressmap
