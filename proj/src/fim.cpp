#include "pressmap/fim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pressmap/error.hpp"

namespace pressmap {

std::string FimToggles::label() const {
  std::vector<std::string> parts;
  if (use_xyz) parts.push_back("xyz");
  if (use_image) parts.push_back("image");
  if (use_latent) parts.push_back("latent");
  if (use_global) parts.push_back("global");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
  return out.empty() ? "none" : out;
}

FimToggles FimToggles::parse(const std::string& label) {
  FimToggles t{false, false, false, false};
  std::stringstream ss(label);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "xyz") t.use_xyz = true;
    else if (part == "image") t.use_image = true;
    else if (part == "latent") t.use_latent = true;
    else if (part == "global") t.use_global = true;
    else throw Error(ErrorCode::ConfigInvalid, "unknown feature group '" + part + "'");
  }
  if (!t.any()) throw Error(ErrorCode::NoFeaturesEnabled, "no feature group in '" + label + "'");
  return t;
}

std::vector<FimToggles> all_toggle_subsets() {
  std::vector<FimToggles> out;
  for (int mask = 1; mask < 16; ++mask) {
    out.push_back({(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0});
  }
  return out;
}

Eigen::MatrixX2i register_vertices(const MatX3& vertices, const ImageGeometry& geom) {
  Eigen::MatrixX2i pix(vertices.rows(), 2);
  for (Eigen::Index v = 0; v < vertices.rows(); ++v) {
    const double c = std::floor((vertices(v, 0) - geom.origin.x()) / geom.pitch);
    const double r = std::floor((vertices(v, 1) - geom.origin.y()) / geom.pitch);
    pix(v, 0) = static_cast<int>(std::clamp(r, 0.0, geom.rows - 1.0));
    pix(v, 1) = static_cast<int>(std::clamp(c, 0.0, geom.cols - 1.0));
  }
  return pix;
}

namespace {

void check_indices(const Eigen::MatrixX2i& pix, std::size_t h, std::size_t w) {
  for (Eigen::Index v = 0; v < pix.rows(); ++v) {
    if (pix(v, 0) < 0 || pix(v, 1) < 0 || static_cast<std::size_t>(pix(v, 0)) >= h ||
        static_cast<std::size_t>(pix(v, 1)) >= w) {
      throw Error(ErrorCode::IndexOutOfRange, "pixel index of vertex " + std::to_string(v) + " outside the map");
    }
  }
}

}  // namespace

Eigen::MatrixXd gather(const Tensor& feature_map, const Eigen::MatrixX2i& pix) {
  if (feature_map.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "feature map must be [C x H x W]");
  const std::size_t c = feature_map.dim(0);
  check_indices(pix, feature_map.dim(1), feature_map.dim(2));
  Eigen::MatrixXd out(pix.rows(), static_cast<Eigen::Index>(c));
  for (Eigen::Index v = 0; v < pix.rows(); ++v)
    for (std::size_t ch = 0; ch < c; ++ch)
      out(v, static_cast<Eigen::Index>(ch)) =
          feature_map.at(ch, static_cast<std::size_t>(pix(v, 0)), static_cast<std::size_t>(pix(v, 1)));
  return out;
}

Tensor gather_vjp(const Eigen::MatrixXd& upstream, const Eigen::MatrixX2i& pix, const Shape& map_shape) {
  if (map_shape.size() != 3 || upstream.rows() != pix.rows() ||
      upstream.cols() != static_cast<Eigen::Index>(map_shape[0])) {
    throw Error(ErrorCode::ShapeMismatch, "gather_vjp: upstream does not match indices and map shape");
  }
  check_indices(pix, map_shape[1], map_shape[2]);
  Tensor grad(map_shape);
  for (Eigen::Index v = 0; v < pix.rows(); ++v)
    for (std::size_t ch = 0; ch < map_shape[0]; ++ch)
      grad.at(ch, static_cast<std::size_t>(pix(v, 0)), static_cast<std::size_t>(pix(v, 1))) +=
          upstream(v, static_cast<Eigen::Index>(ch));
  return grad;
}

VertexFeatureMatrix fuse(const PosedMesh& mesh, const std::optional<Eigen::MatrixXd>& gathered_image,
                         const std::optional<Eigen::MatrixXd>& gathered_latent, const FimToggles& toggles) {
  if (!toggles.any()) throw Error(ErrorCode::NoFeaturesEnabled, "every feature toggle is off");
  const Eigen::Index n = mesh.num_vertices();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> groups;
  const Eigen::MatrixXd xyz = mesh.vertices;
  if (toggles.use_xyz) groups.emplace_back("vertex_xyz", &xyz);
  auto add_optional = [&](bool enabled, const std::optional<Eigen::MatrixXd>& m, const char* name) {
    if (!enabled) return;
    if (!m) throw Error(ErrorCode::DimensionMismatch, std::string(name) + " enabled but not supplied");
    if (m->rows() != n) throw Error(ErrorCode::DimensionMismatch, std::string(name) + " row count differs from N_v");
    groups.emplace_back(name, &*m);
  };
  add_optional(toggles.use_image, gathered_image, "image_feats");
  add_optional(toggles.use_latent, gathered_latent, "latent_feats");

  VertexFeatureMatrix out;
  Eigen::Index width = 0;
  for (const auto& [name, m] : groups) width += m->cols();
  out.features.resize(n, width);
  Eigen::Index col = 0;
  for (const auto& [name, m] : groups) {
    out.features.middleCols(col, m->cols()) = *m;
    out.layout.push_back({name, static_cast<int>(m->cols())});
    col += m->cols();
  }
  return out;
}

}  // namespace pressmap
