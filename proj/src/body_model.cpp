#include "pressmap/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unsupported/Eigen/AutoDiff>

#include "pressmap/error.hpp"

namespace pressmap {
namespace {

template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3T = Eigen::Matrix<T, 3, 3>;

template <typename T>
Mat3T<T> rot6d_impl(const Vec3T<T>& x, const Vec3T<T>& y) {
  using std::sqrt;
  const T nx = sqrt(x.squaredNorm());
  const Vec3T<T> b1 = x / nx;
  const Vec3T<T> u = y - b1.dot(y) * b1;
  const Vec3T<T> b2 = u / sqrt(u.squaredNorm());
  const Vec3T<T> b3 = b1.cross(b2);
  Mat3T<T> r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

template <typename T>
Mat3T<T> rodrigues_impl(const Vec3T<T>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  Mat3T<T> k;
  k << T(0.0), -w.z(), w.y(), w.z(), T(0.0), -w.x(), -w.y(), w.x(), T(0.0);
  Mat3T<T> eye = Mat3T<T>::Identity();
  const T sq = w.squaredNorm();
  if (sq < 1e-12) {
    // Second-order expansion; exact to O(|w|^3).
    return eye + k + T(0.5) * (k * k);
  }
  const T th = sqrt(sq);
  return eye + (sin(th) / th) * k + ((T(1.0) - cos(th)) / sq) * (k * k);
}

void check_rot6d(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (!(nx > 1e-6) || !(ny > 1e-6)) {
    throw Error(ErrorCode::DegenerateRotation, "rotation vectors must have norm > 1e-6");
  }
  const Eigen::Vector3d b1 = x / nx;
  const double perp = (y - b1.dot(y) * b1).norm();
  if (!(perp > 1e-6 * ny)) {
    throw Error(ErrorCode::DegenerateRotation, "rotation vectors are parallel");
  }
}

void check_params(const BodyModel& model, const BodyParams& params) {
  if (params.beta.size() != model.num_betas()) {
    throw Error(ErrorCode::DimensionMismatch, "beta has " + std::to_string(params.beta.size()) +
                                                  " entries, model expects " +
                                                  std::to_string(model.num_betas()));
  }
  if (params.theta.size() != model.num_pose_params()) {
    throw Error(ErrorCode::DimensionMismatch, "theta has " + std::to_string(params.theta.size()) +
                                                  " entries, model expects " +
                                                  std::to_string(model.num_pose_params()));
  }
}

// Per-joint global rotation A_k and translation t_k of the kinematic chain,
// before the rest-joint correction and root translation.
struct Chain {
  MatX3 rest_joints;
  std::vector<Eigen::Matrix3d> local;
  std::vector<Eigen::Matrix3d> rot;
  std::vector<Eigen::Vector3d> trans;
  std::vector<Eigen::Vector3d> disp;  // trans - rest joint, exactly zero at the identity pose
};

Chain compute_chain(const BodyModel& model, const BodyParams& params, const MatX3& shaped) {
  const int nj = model.num_joints();
  Chain c;
  c.rest_joints = model.joint_regressor * shaped;
  c.local.resize(nj);
  c.rot.resize(nj);
  c.trans.resize(nj);
  c.disp.resize(nj);
  c.local[0] = rot6d_to_matrix(params.root_rot_x, params.root_rot_y);
  for (int k = 1; k < nj; ++k) {
    c.local[k] = axis_angle_to_matrix(params.theta.segment<3>(3 * (k - 1)));
  }
  c.rot[0] = c.local[0];
  c.trans[0] = c.rest_joints.row(0).transpose();
  c.disp[0].setZero();
  for (int k = 1; k < nj; ++k) {
    const int p = model.kinematic_parents[k];
    const Eigen::Vector3d bone = (c.rest_joints.row(k) - c.rest_joints.row(p)).transpose();
    c.rot[k] = c.rot[p] * c.local[k];
    c.trans[k] = c.rot[p] * bone + c.trans[p];
    c.disp[k] = (c.rot[p] - Eigen::Matrix3d::Identity()) * bone + c.disp[p];
  }
  return c;
}

}  // namespace

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::Female: return "female";
    case Gender::Male: return "male";
    case Gender::Neutral: return "neutral";
  }
  return "neutral";
}

Gender gender_from_string(std::string_view s) {
  if (s == "female") return Gender::Female;
  if (s == "male") return Gender::Male;
  if (s == "neutral") return Gender::Neutral;
  throw Error(ErrorCode::ConfigInvalid, "unknown gender '" + std::string(s) + "'");
}

void validate(const BodyModel& model) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  const int nv = model.num_vertices();
  const int nj = model.num_joints();
  if (!model.faces) fail("model has no faces");
  if (model.shape_basis.rows() != 3 * nv) fail("shape basis row count must be 3 N_v");
  if (model.joint_regressor.rows() != nj || model.joint_regressor.cols() != nv) {
    fail("joint regressor must be N_j x N_v");
  }
  if (model.skin_weights.rows() != nv || model.skin_weights.cols() != nj) {
    fail("skin weights must be N_v x N_j");
  }
  if (model.pose_limits.rows() != model.num_pose_params() || model.pose_limits.cols() != 2) {
    fail("pose limits must be N_theta x 2");
  }
  for (int v = 0; v < nv; ++v) {
    if (model.skin_weights.row(v).minCoeff() < 0.0) fail("negative skin weight at vertex " + std::to_string(v));
    if (std::abs(model.skin_weights.row(v).sum() - 1.0) > 1e-6) {
      fail("skin weights of vertex " + std::to_string(v) + " do not sum to 1");
    }
  }
  for (int j = 0; j < nj; ++j) {
    if (std::abs(model.joint_regressor.row(j).sum() - 1.0) > 1e-6) {
      fail("joint regressor row " + std::to_string(j) + " does not sum to 1");
    }
  }
  if (nj == 0 || model.kinematic_parents[0] != -1) fail("joint 0 must be the root");
  for (int j = 1; j < nj; ++j) {
    const int p = model.kinematic_parents[j];
    if (p < 0 || p >= j) fail("parent of joint " + std::to_string(j) + " must precede it");
  }
  const FaceArray& faces = *model.faces;
  if (faces.size() > 0 && (faces.minCoeff() < 0 || faces.maxCoeff() >= nv)) fail("face index out of range");
  std::vector<char> owner(nv, 0);
  for (const auto& mask : model.part_masks) {
    for (int v : mask.vertices) {
      if (v < 0 || v >= nv) fail("part mask '" + mask.name + "' index out of range");
      if (owner[v]) fail("part masks overlap at vertex " + std::to_string(v));
      owner[v] = 1;
    }
  }
  for (const auto& [name, ring] : model.measurement_rings) {
    for (int v : ring) {
      if (v < 0 || v >= nv) fail("ring '" + name + "' index out of range");
    }
  }
}

Eigen::VectorXd BodyParams::flatten() const {
  Eigen::VectorXd psi(beta.size() + theta.size() + 9);
  psi << beta, theta, root_trans, root_rot_x, root_rot_y;
  return psi;
}

BodyParams BodyParams::unflatten(std::span<const double> psi, Gender gender) {
  if (psi.size() != static_cast<std::size_t>(kNumParams)) {
    throw Error(ErrorCode::DimensionMismatch,
                "parameter vector has " + std::to_string(psi.size()) + " entries, expected 88");
  }
  BodyParams p;
  p.beta = Eigen::Map<const Eigen::VectorXd>(psi.data() + kParamBetaOffset, kNumBetas);
  p.theta = Eigen::Map<const Eigen::VectorXd>(psi.data() + kParamThetaOffset, kNumPoseParams);
  p.root_trans = Eigen::Map<const Eigen::Vector3d>(psi.data() + kParamTransOffset);
  p.root_rot_x = Eigen::Map<const Eigen::Vector3d>(psi.data() + kParamRotXOffset);
  p.root_rot_y = Eigen::Map<const Eigen::Vector3d>(psi.data() + kParamRotYOffset);
  p.gender = gender;
  return p;
}

Eigen::Matrix3d rot6d_to_matrix(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  check_rot6d(x, y);
  return rot6d_impl<double>(x, y);
}

Eigen::Matrix<double, 9, 6> rot6d_jacobian(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  check_rot6d(x, y);
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 6, 1>>;
  Vec3T<AD> xa, ya;
  for (int i = 0; i < 3; ++i) {
    xa[i] = AD(x[i], 6, i);
    ya[i] = AD(y[i], 6, 3 + i);
  }
  const Mat3T<AD> r = rot6d_impl<AD>(xa, ya);
  Eigen::Matrix<double, 9, 6> jac;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) jac.row(3 * a + b) = r(a, b).derivatives().transpose();
  }
  return jac;
}

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& w) { return rodrigues_impl<double>(w); }

Eigen::Matrix<double, 9, 3> axis_angle_jacobian(const Eigen::Vector3d& w) {
  using AD = Eigen::AutoDiffScalar<Eigen::Vector3d>;
  Vec3T<AD> wa;
  for (int i = 0; i < 3; ++i) wa[i] = AD(w[i], 3, i);
  const Mat3T<AD> r = rodrigues_impl<AD>(wa);
  Eigen::Matrix<double, 9, 3> jac;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) jac.row(3 * a + b) = r(a, b).derivatives().transpose();
  }
  return jac;
}

MatX3 shaped_vertices(const BodyModel& model, const Eigen::VectorXd& beta) {
  if (beta.size() != model.num_betas()) {
    throw Error(ErrorCode::DimensionMismatch, "beta has " + std::to_string(beta.size()) +
                                                  " entries, model expects " +
                                                  std::to_string(model.num_betas()));
  }
  MatX3 out = model.template_vertices;
  const Eigen::VectorXd offset = model.shape_basis * beta;
  out += Eigen::Map<const MatX3>(offset.data(), model.num_vertices(), 3);
  return out;
}

MatX3 blend_skinning(const Eigen::MatrixXd& skin_weights, const MatX3& rest,
                     std::span<const Eigen::Affine3d> transforms) {
  MatX3 out = MatX3::Zero(rest.rows(), 3);
  for (Eigen::Index v = 0; v < rest.rows(); ++v) {
    const Eigen::Vector3d p = rest.row(v).transpose();
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < transforms.size(); ++k) {
      const double w = skin_weights(v, static_cast<Eigen::Index>(k));
      if (w != 0.0) acc += w * (transforms[k] * p);
    }
    out.row(v) = acc.transpose();
  }
  return out;
}

PosedMesh pose_mesh(const BodyModel& model, const BodyParams& params) {
  check_params(model, params);
  const MatX3 shaped = shaped_vertices(model, params.beta);
  const Chain c = compute_chain(model, params, shaped);
  const int nj = model.num_joints();

  // Displacement form: v = s + sum_k w_k ((A_k - I)(s - J_k) + d_k) + trans.
  std::vector<Eigen::Matrix3d> delta(nj);
  for (int k = 0; k < nj; ++k) delta[k] = c.rot[k] - Eigen::Matrix3d::Identity();
  PosedMesh mesh;
  mesh.vertices.resize(shaped.rows(), 3);
  for (Eigen::Index v = 0; v < shaped.rows(); ++v) {
    const Eigen::Vector3d s = shaped.row(v).transpose();
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int k = 0; k < nj; ++k) {
      const double w = model.skin_weights(v, k);
      if (w != 0.0) acc += w * (delta[k] * (s - c.rest_joints.row(k).transpose()) + c.disp[k]);
    }
    mesh.vertices.row(v) = (s + acc + params.root_trans).transpose();
  }
  mesh.joints.resize(nj, 3);
  for (int k = 0; k < nj; ++k) {
    mesh.joints.row(k) = (c.rest_joints.row(k).transpose() + c.disp[k] + params.root_trans).transpose();
  }
  mesh.faces = model.faces;
  return mesh;
}

Eigen::VectorXd pose_mesh_vjp(const BodyModel& model, const BodyParams& params,
                              const MatX3& grad_vertices, const MatX3& grad_joints) {
  check_params(model, params);
  const int nv = model.num_vertices();
  const int nj = model.num_joints();
  if (grad_vertices.rows() != nv || grad_joints.rows() != nj) {
    throw Error(ErrorCode::DimensionMismatch, "cotangent shapes do not match the model");
  }
  const MatX3 shaped = shaped_vertices(model, params.beta);
  const Chain c = compute_chain(model, params, shaped);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(kNumParams);
  grad.segment<3>(kParamTransOffset) =
      grad_vertices.colwise().sum().transpose() + grad_joints.colwise().sum().transpose();

  // Skinning: v_i = sum_k w_ik (A_k (s_i - J_k) + t_k).
  std::vector<Eigen::Matrix3d> g_rot(nj, Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> g_trans(nj, Eigen::Vector3d::Zero());
  MatX3 g_rest_joints = MatX3::Zero(nj, 3);
  MatX3 g_shaped = MatX3::Zero(nv, 3);
  std::vector<Eigen::Vector3d> weighted_sum(nj, Eigen::Vector3d::Zero());
  for (int i = 0; i < nv; ++i) {
    const Eigen::Vector3d gv = grad_vertices.row(i).transpose();
    const Eigen::Vector3d s = shaped.row(i).transpose();
    Eigen::Vector3d gs = Eigen::Vector3d::Zero();
    for (int k = 0; k < nj; ++k) {
      const double w = model.skin_weights(i, k);
      if (w == 0.0) continue;
      g_rot[k].noalias() += (w * gv) * s.transpose();
      weighted_sum[k] += w * gv;
      gs.noalias() += w * (c.rot[k].transpose() * gv);
    }
    g_shaped.row(i) += gs.transpose();
  }
  for (int k = 0; k < nj; ++k) {
    const Eigen::Vector3d jk = c.rest_joints.row(k).transpose();
    g_rot[k].noalias() -= weighted_sum[k] * jk.transpose();
    g_trans[k] += weighted_sum[k] + grad_joints.row(k).transpose();
    g_rest_joints.row(k) -= (c.rot[k].transpose() * weighted_sum[k]).transpose();
  }

  // Kinematic chain, leaves to root.
  std::vector<Eigen::Matrix3d> g_local(nj, Eigen::Matrix3d::Zero());
  for (int k = nj - 1; k >= 1; --k) {
    const int p = model.kinematic_parents[k];
    const Eigen::Vector3d offset = (c.rest_joints.row(k) - c.rest_joints.row(p)).transpose();
    g_rot[p].noalias() += g_rot[k] * c.local[k].transpose();
    g_local[k] = c.rot[p].transpose() * g_rot[k];
    g_rot[p].noalias() += g_trans[k] * offset.transpose();
    const Eigen::Vector3d back = c.rot[p].transpose() * g_trans[k];
    g_rest_joints.row(k) += back.transpose();
    g_rest_joints.row(p) -= back.transpose();
    g_trans[p] += g_trans[k];
  }
  g_local[0] = g_rot[0];
  g_rest_joints.row(0) += g_trans[0].transpose();

  g_shaped.noalias() += model.joint_regressor.transpose() * g_rest_joints;
  const Eigen::Map<const Eigen::VectorXd> g_flat(g_shaped.data(), 3 * nv);
  grad.segment(kParamBetaOffset, model.num_betas()) = model.shape_basis.transpose() * g_flat;

  auto flat9 = [](const Eigen::Matrix3d& m) {
    Eigen::Matrix<double, 9, 1> f;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) f[3 * a + b] = m(a, b);
    return f;
  };
  for (int k = 1; k < nj; ++k) {
    const Eigen::Vector3d w = params.theta.segment<3>(3 * (k - 1));
    grad.segment<3>(kParamThetaOffset + 3 * (k - 1)) = axis_angle_jacobian(w).transpose() * flat9(g_local[k]);
  }
  const Eigen::Matrix<double, 6, 1> g6 =
      rot6d_jacobian(params.root_rot_x, params.root_rot_y).transpose() * flat9(g_local[0]);
  grad.segment<3>(kParamRotXOffset) = g6.head<3>();
  grad.segment<3>(kParamRotYOffset) = g6.tail<3>();
  return grad;
}

PosedMesh rest_pose_mesh(const BodyModel& model, const Eigen::VectorXd& beta) {
  BodyParams params;
  params.beta = beta;
  params.theta = Eigen::VectorXd::Zero(model.num_pose_params());
  params.gender = model.gender;
  return pose_mesh(model, params);
}

Measurements anatomical_measurements(const PosedMesh& mesh, const BodyModel& model) {
  auto ring_length = [&](std::string_view name) {
    auto it = model.measurement_rings.find(std::string(name));
    if (it == model.measurement_rings.end()) {
      throw Error(ErrorCode::MissingRing, "model has no '" + std::string(name) + "' ring");
    }
    const auto& ring = it->second;
    double len = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const int a = ring[i];
      const int b = ring[(i + 1) % ring.size()];
      len += (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
    }
    return len;
  };
  Measurements m;
  m.height_m = mesh.vertices.col(1).maxCoeff() - mesh.vertices.col(1).minCoeff();
  m.chest_m = ring_length("chest");
  m.waist_m = ring_length("waist");
  m.hips_m = ring_length("hips");
  return m;
}

NeighborTable build_neighbor_table(const FaceArray& faces, int num_vertices) {
  std::vector<std::set<int>> adj(num_vertices);
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      const int a = faces(f, e);
      const int b = faces(f, (e + 1) % 3);
      if (a < 0 || a >= num_vertices || b < 0 || b >= num_vertices) {
        throw Error(ErrorCode::IndexOutOfRange, "face " + std::to_string(f) + " references a missing vertex");
      }
      if (a == b) continue;
      adj[a].insert(b);
      adj[b].insert(a);
    }
  }
  NeighborTable table;
  table.ring1.resize(num_vertices);
  table.ring2.resize(num_vertices);
  for (int v = 0; v < num_vertices; ++v) {
    table.ring1[v].assign(adj[v].begin(), adj[v].end());
    std::set<int> two(adj[v].begin(), adj[v].end());
    for (int n : adj[v]) two.insert(adj[n].begin(), adj[n].end());
    two.erase(v);
    table.ring2[v].assign(two.begin(), two.end());
  }
  return table;
}

}  // namespace pressmap
