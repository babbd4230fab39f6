#include "pressmap/model_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "pressmap/error.hpp"
#include "pressmap/pmt1.hpp"

namespace pressmap {
namespace {

using nlohmann::json;

template <typename Derived>
Tensor to_tensor(const Eigen::MatrixBase<Derived>& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.at(r, c) = static_cast<double>(m(r, c));
  return t;
}

Eigen::MatrixXd from_tensor(const Tensor& t, std::size_t rows, std::size_t cols, const char* name) {
  if (t.size() != rows * cols) {
    throw Error(ErrorCode::IoError, std::string("model tensor '") + name + "' has unexpected shape " +
                                        shape_string(t.shape));
  }
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = t.data[r * cols + c];
  return m;
}

}  // namespace

void save_model(const BodyModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int nv = model.num_vertices();
  json header;
  header["format"] = "pressmap-body-model";
  header["version"] = 1;
  header["gender_tag"] = std::string(to_string(model.gender));
  header["num_vertices"] = nv;
  header["num_betas"] = model.num_betas();
  header["kinematic_parents"] = model.kinematic_parents;
  header["axes"] = {{"rest_vertical", "+Y"}, {"mattress_normal", "+Z"}, {"units", "meters"}};
  for (const auto& [name, ring] : model.measurement_rings) header["measurement_rings"][name] = ring;
  json parts = json::array();
  for (const auto& m : model.part_masks) parts.push_back({{"name", m.name}, {"vertices", m.vertices}});
  header["part_masks"] = parts;
  std::ofstream out(dir / "header.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "header.json").string());
  out << header.dump(2) << '\n';

  pmt1::save(dir / "template_vertices.pmt", to_tensor(model.template_vertices));
  pmt1::save(dir / "faces.pmt", to_tensor(*model.faces));
  Tensor basis = to_tensor(model.shape_basis);
  basis.shape = {static_cast<std::size_t>(nv), 3, static_cast<std::size_t>(model.num_betas())};
  pmt1::save(dir / "shape_basis.pmt", basis);
  pmt1::save(dir / "joint_regressor.pmt", to_tensor(model.joint_regressor));
  pmt1::save(dir / "skin_weights.pmt", to_tensor(model.skin_weights));
  pmt1::save(dir / "pose_limits.pmt", to_tensor(model.pose_limits));
}

BodyModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "header.json");
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + (dir / "header.json").string());
  json header;
  try {
    header = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad model header: ") + e.what());
  }
  BodyModel model;
  try {
    model.gender = gender_from_string(header.at("gender_tag").get<std::string>());
    model.kinematic_parents = header.at("kinematic_parents").get<std::vector<int>>();
    for (const auto& [name, ring] : header.at("measurement_rings").items()) {
      model.measurement_rings[name] = ring.get<std::vector<int>>();
    }
    for (const auto& p : header.at("part_masks")) {
      model.part_masks.push_back({p.at("name").get<std::string>(), p.at("vertices").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad model header: ") + e.what());
  }
  const Tensor tv = pmt1::load(dir / "template_vertices.pmt");
  if (tv.rank() != 2 || tv.dim(1) != 3) throw Error(ErrorCode::IoError, "template_vertices must be N x 3");
  const std::size_t nv = tv.dim(0);
  const std::size_t nj = model.kinematic_parents.size();
  model.template_vertices = from_tensor(tv, nv, 3, "template_vertices");
  const Tensor tf = pmt1::load(dir / "faces.pmt");
  if (tf.rank() != 2 || tf.dim(1) != 3) throw Error(ErrorCode::IoError, "faces must be F x 3");
  model.faces = std::make_shared<const FaceArray>(from_tensor(tf, tf.dim(0), 3, "faces").cast<int>());
  const Tensor tb = pmt1::load(dir / "shape_basis.pmt");
  if (tb.rank() != 3) throw Error(ErrorCode::IoError, "shape_basis must be N x 3 x B");
  model.shape_basis = from_tensor(tb, 3 * nv, tb.dim(2), "shape_basis");
  model.joint_regressor = from_tensor(pmt1::load(dir / "joint_regressor.pmt"), nj, nv, "joint_regressor");
  model.skin_weights = from_tensor(pmt1::load(dir / "skin_weights.pmt"), nv, nj, "skin_weights");
  model.pose_limits = from_tensor(pmt1::load(dir / "pose_limits.pmt"), 3 * (nj - 1), 2, "pose_limits");
  validate(model);
  return model;
}

}  // namespace pressmap
