#include <gtest/gtest.h>

#include <deque>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <random>
#include <set>

#include "pressmap/body_model.hpp"
#include "pressmap/error.hpp"
#include "pressmap/model_io.hpp"
#include "pressmap/toy_model.hpp"

namespace pressmap {
namespace {

const BodyModel& toy() {
  static const BodyModel model = generate_toy_model({690, 7, Gender::Male});
  return model;
}

BodyParams random_params(std::mt19937_64& rng, double pose_scale = 0.5) {
  std::normal_distribution<double> n(0.0, 1.0);
  BodyParams p;
  for (int i = 0; i < kNumBetas; ++i) p.beta[i] = n(rng);
  for (int i = 0; i < kNumPoseParams; ++i) p.theta[i] = pose_scale * n(rng);
  p.root_trans = Eigen::Vector3d(n(rng), n(rng), n(rng));
  p.root_rot_x = Eigen::Vector3d(1.0 + 0.3 * n(rng), 0.3 * n(rng), 0.3 * n(rng));
  p.root_rot_y = Eigen::Vector3d(0.3 * n(rng), 1.0 + 0.3 * n(rng), 0.3 * n(rng));
  return p;
}

// Independent LBS: per-joint world matrices rebuilt from the root for every
// joint, rotations from Eigen::AngleAxisd.
MatX3 brute_force_lbs(const BodyModel& m, const BodyParams& p) {
  const int nv = m.num_vertices();
  const int nj = m.num_joints();
  MatX3 rest(nv, 3);
  for (int v = 0; v < nv; ++v)
    for (int k = 0; k < 3; ++k) {
      double s = m.template_vertices(v, k);
      for (int b = 0; b < m.num_betas(); ++b) s += m.shape_basis(3 * v + k, b) * p.beta[b];
      rest(v, k) = s;
    }
  std::vector<Eigen::Vector3d> joints(nj, Eigen::Vector3d::Zero());
  for (int j = 0; j < nj; ++j)
    for (int v = 0; v < nv; ++v) joints[j] += m.joint_regressor(j, v) * rest.row(v).transpose();
  auto local = [&](int j) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    if (j == 0) {
      const Eigen::Vector3d b1 = p.root_rot_x.normalized();
      const Eigen::Vector3d b2 = (p.root_rot_y - b1.dot(p.root_rot_y) * b1).normalized();
      t.block<3, 1>(0, 0) = b1;
      t.block<3, 1>(0, 1) = b2;
      t.block<3, 1>(0, 2) = b1.cross(b2);
      t.block<3, 1>(0, 3) = joints[0];
    } else {
      const Eigen::Vector3d w = p.theta.segment<3>(3 * (j - 1));
      const double a = w.norm();
      if (a > 0) t.block<3, 3>(0, 0) = Eigen::AngleAxisd(a, w / a).toRotationMatrix();
      t.block<3, 1>(0, 3) = joints[j] - joints[m.kinematic_parents[j]];
    }
    return t;
  };
  MatX3 out(nv, 3);
  for (int v = 0; v < nv; ++v) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int j = 0; j < nj; ++j) {
      Eigen::Matrix4d g = Eigen::Matrix4d::Identity();
      for (int k = j; k >= 0; k = m.kinematic_parents[k]) g = local(k) * g;
      Eigen::Matrix4d rel = Eigen::Matrix4d::Identity();
      rel.block<3, 1>(0, 3) = -joints[j];
      acc += m.skin_weights(v, j) * (g * rel * rest.row(v).transpose().homogeneous());
    }
    out.row(v) = (acc.head<3>() + p.root_trans).transpose();
  }
  return out;
}

TEST(Rot6d, OrthonormalInputGivesIdentity) {
  EXPECT_TRUE(rot6d_to_matrix({1, 0, 0}, {0, 1, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
  EXPECT_TRUE(rot6d_to_matrix({2, 0, 0}, {0, 3, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(Rot6d, ColumnConstruction) {
  const Eigen::Matrix3d r = rot6d_to_matrix({0, 1, 0}, {-1, 0, 0});
  EXPECT_LT((r * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Rot6d, RandomInputsAreRotations) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const Eigen::Vector3d y(n(rng), n(rng), n(rng));
    const Eigen::Matrix3d r = rot6d_to_matrix(x, y);
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-6);
    EXPECT_LT((r.col(0) - x.normalized()).norm(), 1e-12);
  }
}

TEST(Rot6d, DegenerateInputsThrow) {
  auto code = [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    try {
      rot6d_to_matrix(x, y);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code({0, 0, 0}, {0, 1, 0}), ErrorCode::DegenerateRotation);
  EXPECT_EQ(code({1, 0, 0}, {1e-9, 0, 0}), ErrorCode::DegenerateRotation);
  EXPECT_EQ(code({1, 0, 0}, {2, 0, 0}), ErrorCode::DegenerateRotation);
}

TEST(PoseMesh, IdentityPoseReturnsTemplate) {
  BodyParams p;
  const PosedMesh mesh = pose_mesh(toy(), p);
  EXPECT_EQ((mesh.vertices - toy().template_vertices).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PoseMesh, ZeroPoseIsRigidAboutRootJoint) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    BodyParams p = random_params(rng);
    p.theta.setZero();
    const PosedMesh mesh = pose_mesh(toy(), p);
    const MatX3 rest = shaped_vertices(toy(), p.beta);
    const Eigen::Vector3d j0 = (toy().joint_regressor.row(0) * rest).transpose();
    const Eigen::Matrix3d r = rot6d_to_matrix(p.root_rot_x, p.root_rot_y);
    double worst = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      const Eigen::Vector3d expect = r * (rest.row(v).transpose() - j0) + j0 + p.root_trans;
      worst = std::max(worst, (mesh.vertices.row(v).transpose() - expect).norm());
    }
    EXPECT_LT(worst, 1e-9);
  }
}

TEST(PoseMesh, ElbowBentMatchesBruteForceOracle) {
  BodyParams p;
  p.theta.segment<3>(3 * (18 - 1)) = Eigen::Vector3d(-std::numbers::pi / 2, 0, 0);
  const PosedMesh mesh = pose_mesh(toy(), p);
  const MatX3 oracle = brute_force_lbs(toy(), p);
  EXPECT_LT((mesh.vertices - oracle).cwiseAbs().maxCoeff(), 1e-12);
  // The forearm actually moved.
  EXPECT_GT((mesh.vertices - toy().template_vertices).rowwise().norm().maxCoeff(), 0.1);
}

TEST(PoseMesh, RandomPosesMatchBruteForceOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    const BodyParams p = random_params(rng);
    EXPECT_LT((pose_mesh(toy(), p).vertices - brute_force_lbs(toy(), p)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(PoseMesh, PartitionOfUnityGivesCommonTransform) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Eigen::Affine3d t = Eigen::Affine3d::Identity();
  t.linear() = rot6d_to_matrix({n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)});
  t.translation() = Eigen::Vector3d(n(rng), n(rng), n(rng));
  const std::vector<Eigen::Affine3d> all(kNumJoints, t);
  const MatX3 skinned = blend_skinning(toy().skin_weights, toy().template_vertices, all);
  const MatX3 direct = (toy().template_vertices * t.linear().transpose()).rowwise() + t.translation().transpose();
  EXPECT_LT((skinned - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PoseMesh, DimensionMismatchThrows) {
  BodyParams p;
  p.beta = Eigen::VectorXd::Zero(3);
  try {
    pose_mesh(toy(), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

// Central differences of <gV, V(psi)> + <gJ, J(psi)> against the VJP.
TEST(PoseMesh, VjpMatchesFiniteDifferences) {
  const BodyModel small = generate_toy_model({240, 3, Gender::Female});
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  const BodyParams p = random_params(rng);
  MatX3 gv(small.num_vertices(), 3);
  MatX3 gj(kNumJoints, 3);
  for (Eigen::Index i = 0; i < gv.size(); ++i) gv.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < gj.size(); ++i) gj.data()[i] = n(rng);
  const Eigen::VectorXd analytic = pose_mesh_vjp(small, p, gv, gj);
  const Eigen::VectorXd psi = p.flatten();
  Eigen::VectorXd numeric(kNumParams);
  const double h = 1e-6;
  for (int i = 0; i < kNumParams; ++i) {
    auto f = [&](double delta) {
      Eigen::VectorXd q = psi;
      q[i] += delta;
      const PosedMesh m = pose_mesh(small, BodyParams::unflatten({q.data(), static_cast<std::size_t>(q.size())}));
      return (m.vertices.cwiseProduct(gv)).sum() + (m.joints.cwiseProduct(gj)).sum();
    };
    numeric[i] = (f(h) - f(-h)) / (2 * h);
  }
  const double rel = (analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm());
  EXPECT_LT(rel, 1e-6);
}

TEST(PoseMesh, AxisAngleJacobianNearZero) {
  const Eigen::Vector3d w(1e-8, -2e-8, 0.5e-8);
  const auto jac = axis_angle_jacobian(w);
  // d(R)/dw at 0 is the skew generator: dR_{21}/dw_z = 1, dR_{12}/dw_z = -1.
  EXPECT_NEAR(jac(3 * 1 + 0, 2), 1.0, 1e-7);
  EXPECT_NEAR(jac(3 * 0 + 1, 2), -1.0, 1e-7);
}

TEST(RestPose, ZeroBetaIsTemplate) {
  const PosedMesh m = rest_pose_mesh(toy(), Eigen::VectorXd::Zero(kNumBetas));
  EXPECT_EQ((m.vertices - toy().template_vertices).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RestPose, LinearInBeta) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(kNumBetas);
  e1[0] = 1.0;
  const MatX3 dir0 = Eigen::Map<const MatX3>(toy().shape_basis.col(0).data(), toy().num_vertices(), 3);
  const MatX3 dir1 = Eigen::Map<const MatX3>(toy().shape_basis.col(1).data(), toy().num_vertices(), 3);
  EXPECT_LT((rest_pose_mesh(toy(), e1).vertices - (toy().template_vertices + dir0)).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(kNumBetas);
  b[0] = 1.0;
  b[1] = -1.0;
  const MatX3 oracle = toy().template_vertices + dir0 - dir1;
  EXPECT_LT((rest_pose_mesh(toy(), b).vertices - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Measurements, SquareRingPerimeter) {
  BodyModel m;
  m.template_vertices.resize(4, 3);
  m.template_vertices << 0, 0, 0, 0.2, 1.0, 0, 0.2, 0.5, 0.2, 0, 0.5, 0.2;
  m.measurement_rings["waist"] = {0, 1, 2, 3};
  m.measurement_rings["chest"] = {0, 1, 2, 3};
  m.measurement_rings["hips"] = {0, 1, 2, 3};
  PosedMesh mesh;
  mesh.vertices = m.template_vertices;
  mesh.vertices.col(1).setConstant(0.5);
  mesh.vertices(0, 1) = 0.0;
  mesh.vertices(1, 1) = 1.0;
  // Flatten into a square ring in the XZ plane for the perimeter.
  PosedMesh ring = mesh;
  ring.vertices.col(1).setZero();
  EXPECT_NEAR(anatomical_measurements(ring, m).waist_m, 0.8, 1e-12);
  EXPECT_NEAR(anatomical_measurements(mesh, m).height_m, 1.0, 1e-12);
}

TEST(Measurements, MissingRingThrows) {
  BodyModel m = toy();
  m.measurement_rings.erase("hips");
  try {
    anatomical_measurements(rest_pose_mesh(m, Eigen::VectorXd::Zero(kNumBetas)), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingRing);
  }
}

TEST(Measurements, HomogeneousUnderScaling) {
  PosedMesh mesh = rest_pose_mesh(toy(), Eigen::VectorXd::Zero(kNumBetas));
  const Measurements a = anatomical_measurements(mesh, toy());
  mesh.vertices *= 2.0;
  const Measurements b = anatomical_measurements(mesh, toy());
  EXPECT_DOUBLE_EQ(b.height_m, 2 * a.height_m);
  EXPECT_NEAR(b.chest_m, 2 * a.chest_m, 1e-12);
  EXPECT_NEAR(b.waist_m, 2 * a.waist_m, 1e-12);
  EXPECT_NEAR(b.hips_m, 2 * a.hips_m, 1e-12);
}

TEST(Measurements, ToyModelMatchesRawArrayOracle) {
  const PosedMesh mesh = rest_pose_mesh(toy(), Eigen::VectorXd::Zero(kNumBetas));
  const Measurements m = anatomical_measurements(mesh, toy());
  double lo = 1e9, hi = -1e9;
  for (int v = 0; v < toy().num_vertices(); ++v) {
    lo = std::min(lo, toy().template_vertices(v, 1));
    hi = std::max(hi, toy().template_vertices(v, 1));
  }
  EXPECT_DOUBLE_EQ(m.height_m, hi - lo);
  auto perimeter = [&](const std::string& name) {
    const auto& r = toy().measurement_rings.at(name);
    double len = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      double d2 = 0;
      for (int k = 0; k < 3; ++k) {
        const double d = toy().template_vertices(r[i], k) - toy().template_vertices(r[(i + 1) % r.size()], k);
        d2 += d * d;
      }
      len += std::sqrt(d2);
    }
    return len;
  };
  EXPECT_NEAR(m.chest_m, perimeter("chest"), 1e-12);
  EXPECT_NEAR(m.waist_m, perimeter("waist"), 1e-12);
  EXPECT_NEAR(m.hips_m, perimeter("hips"), 1e-12);
  // Plausible adult proportions.
  EXPECT_GT(m.height_m, 1.5);
  EXPECT_LT(m.height_m, 1.9);
  EXPECT_GT(m.chest_m, m.waist_m);
}

TEST(Neighbors, SingleTriangle) {
  FaceArray f(1, 3);
  f << 0, 1, 2;
  const NeighborTable t = build_neighbor_table(f, 3);
  EXPECT_EQ(t.ring1[0], (std::vector<int>{1, 2}));
  EXPECT_EQ(t.ring2[0], (std::vector<int>{1, 2}));
}

TEST(Neighbors, StripMatchesBfsOracle) {
  // Triangle strip over vertices 0..9: (i, i+1, i+2).
  FaceArray f(8, 3);
  for (int i = 0; i < 8; ++i) f.row(i) << i, i + 1, i + 2;
  const NeighborTable t = build_neighbor_table(f, 10);
  std::vector<std::set<int>> adj(10);
  for (int i = 0; i < 8; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) adj[f(i, a)].insert(f(i, b));
  for (int v = 0; v < 10; ++v) {
    std::vector<int> depth(10, -1);
    std::deque<int> q{v};
    depth[v] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (int w : adj[u])
        if (depth[w] < 0) {
          depth[w] = depth[u] + 1;
          q.push_back(w);
        }
    }
    std::vector<int> r1, r2;
    for (int w = 0; w < 10; ++w) {
      if (depth[w] == 1) r1.push_back(w);
      if (depth[w] == 1 || depth[w] == 2) r2.push_back(w);
    }
    EXPECT_EQ(t.ring1[v], r1);
    EXPECT_EQ(t.ring2[v], r2);
  }
  // End vertex reaches the vertex two edges away.
  EXPECT_NE(std::find(t.ring2[0].begin(), t.ring2[0].end(), 4), t.ring2[0].end());
}

TEST(Neighbors, ToyTableIsSymmetricAndSelfFree) {
  const NeighborTable t = build_neighbor_table(toy());
  for (int v = 0; v < toy().num_vertices(); ++v) {
    for (int w : t.ring1[v]) {
      EXPECT_NE(w, v);
      EXPECT_TRUE(std::binary_search(t.ring1[w].begin(), t.ring1[w].end(), v));
      EXPECT_TRUE(std::binary_search(t.ring2[v].begin(), t.ring2[v].end(), w));
    }
    EXPECT_FALSE(std::binary_search(t.ring2[v].begin(), t.ring2[v].end(), v));
  }
}

TEST(Neighbors, OutOfRangeFaceThrows) {
  FaceArray f(1, 3);
  f << 0, 1, 5;
  try {
    build_neighbor_table(f, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(ToyModel, InvariantsHoldForDefaultConfig) {
  const BodyModel m = generate_toy_model({690, 7, Gender::Neutral});
  EXPECT_NO_THROW(validate(m));
  EXPECT_EQ(m.num_vertices(), 690);
  EXPECT_EQ(m.num_joints(), 24);
  EXPECT_EQ(m.num_betas(), 10);
  ASSERT_EQ(m.part_masks.size(), 14u);
  for (const auto& mask : m.part_masks) EXPECT_FALSE(mask.vertices.empty()) << mask.name;
  for (auto name : kRingNames) EXPECT_TRUE(m.measurement_rings.count(std::string(name)));
}

TEST(ToyModel, EveryVertexCountFromMinimumWorks) {
  for (int n = 200; n <= 260; ++n) {
    const BodyModel m = generate_toy_model({n, 1, Gender::Male});
    EXPECT_EQ(m.num_vertices(), n);
  }
  EXPECT_THROW(generate_toy_model({199, 1, Gender::Male}), Error);
}

TEST(ToyModel, DeterministicModelFiles) {
  const auto base = std::filesystem::temp_directory_path() / "pressmap_toy_det";
  std::filesystem::remove_all(base);
  save_model(generate_toy_model({690, 7, Gender::Female}), base / "a");
  save_model(generate_toy_model({690, 7, Gender::Female}), base / "b");
  for (const auto& entry : std::filesystem::directory_iterator(base / "a")) {
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(base / "b" / entry.path().filename(), std::ios::binary);
    const std::string a((std::istreambuf_iterator<char>(fa)), {});
    const std::string b((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(a, b) << entry.path().filename();
  }
  const BodyModel loaded = load_model(base / "a");
  const BodyModel fresh = generate_toy_model({690, 7, Gender::Female});
  EXPECT_EQ(loaded.template_vertices, fresh.template_vertices);
  EXPECT_EQ(*loaded.faces, *fresh.faces);
  EXPECT_EQ(loaded.shape_basis, fresh.shape_basis);
  EXPECT_EQ(loaded.skin_weights, fresh.skin_weights);
  EXPECT_EQ(loaded.gender, Gender::Female);
  std::filesystem::remove_all(base);
}

TEST(ToyModel, GendersShareTopology) {
  const BodyModel f = generate_toy_model({690, 7, Gender::Female});
  const BodyModel m = generate_toy_model({690, 7, Gender::Male});
  EXPECT_EQ(*f.faces, *m.faces);
  EXPECT_GT((f.template_vertices - m.template_vertices).cwiseAbs().maxCoeff(), 1e-3);
}

}  // namespace
}  // namespace pressmap
