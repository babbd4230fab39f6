#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pressmap/error.hpp"
#include "pressmap/synth_data.hpp"

namespace pressmap {
namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

const ModelSet& models() {
  static const ModelSet m = ModelSet::generate(300, 7);
  return m;
}

DatasetConfig small_config(int per_cell = 1) {
  DatasetConfig c;
  c.seed = 11;
  c.model_vertices = 300;
  for (PoseCategory p : {PoseCategory::Supine, PoseCategory::LeftLateral, PoseCategory::RightLateral})
    for (Cover cv : {Cover::Uncovered, Cover::Cover1, Cover::Cover2}) c.counts[p][cv] = per_cell;
  return c;
}

PosedMesh make_mesh(std::vector<Eigen::Vector3d> pts, std::vector<Eigen::Vector3i> tris) {
  PosedMesh m;
  m.vertices.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.vertices.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  auto f = std::make_shared<FaceArray>(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) f->row(static_cast<Eigen::Index>(i)) = tris[i].transpose();
  m.faces = f;
  return m;
}

PosedMesh box(Eigen::Vector3d lo, Eigen::Vector3d hi) {
  std::vector<Eigen::Vector3d> p;
  for (int i = 0; i < 8; ++i)
    p.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  return make_mesh(p, {{0, 1, 3}, {0, 3, 2}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                       {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 3, 7}, {1, 7, 5}});
}

// n x n grid of vertices at height z, two triangles per cell.
PosedMesh plate(double x0, double y0, double size, int n, double z) {
  std::vector<Eigen::Vector3d> p;
  std::vector<Eigen::Vector3i> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.emplace_back(x0 + size * j / (n - 1), y0 + size * i / (n - 1), z);
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      const int a = i * n + j;
      t.emplace_back(a, a + 1, a + n + 1);
      t.emplace_back(a, a + n + 1, a + n);
    }
  return make_mesh(p, t);
}

// Highest hit of a downward vertical ray through (x, y), or nullopt.
std::optional<double> ray_cast(const PosedMesh& m, double x, double y) {
  std::optional<double> best;
  const Eigen::Vector3d orig(x, y, 100.0), dir(0, 0, -1);
  for (Eigen::Index t = 0; t < m.faces->rows(); ++t) {
    const Eigen::Vector3d a = m.vertices.row((*m.faces)(t, 0)), b = m.vertices.row((*m.faces)(t, 1)),
                          c = m.vertices.row((*m.faces)(t, 2));
    const Eigen::Vector3d e1 = b - a, e2 = c - a, pv = dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) continue;
    const Eigen::Vector3d tv = orig - a;
    const double u = tv.dot(pv) / det;
    if (u < 0 || u > 1) continue;
    const Eigen::Vector3d qv = tv.cross(e1);
    const double v = dir.dot(qv) / det;
    if (v < 0 || u + v > 1) continue;
    const double z = orig.z() - e2.dot(qv) / det;
    if (!best || z > *best) best = z;
  }
  return best;
}

double min_z(const PosedMesh& m) { return m.vertices.col(2).minCoeff(); }

TEST(SampleParams, DeterministicForFixedSeed) {
  std::mt19937_64 a(5), b(5);
  const BodyParams p = sample_params(a, PoseCategory::LeftLateral, models().female);
  const BodyParams q = sample_params(b, PoseCategory::LeftLateral, models().female);
  EXPECT_EQ(p.flatten(), q.flatten());
}

double roll_deg(const BodyParams& p) {
  const Eigen::Matrix3d r = rot6d_to_matrix(p.root_rot_x, p.root_rot_y);
  // Body's forward axis (+Z at rest) tilted about the long axis.
  const Eigen::Vector3d fwd = r.col(2);
  return std::atan2(fwd.x(), fwd.z()) / kDegToRad;
}

TEST(SampleParams, SupineRollWithinFifteenDegrees) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const BodyParams p = sample_params(rng, PoseCategory::Supine, models().male);
    EXPECT_LE(std::abs(roll_deg(p)), 15.0);
  }
}

TEST(SampleParams, LateralRollNearNinety) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(roll_deg(sample_params(rng, PoseCategory::LeftLateral, models().male)), 90.0, 15.0);
    EXPECT_NEAR(roll_deg(sample_params(rng, PoseCategory::RightLateral, models().male)), -90.0, 15.0);
  }
}

TEST(SampleParams, HundredSamplesSatisfyInvariants) {
  std::mt19937_64 rng(3);
  const BodyModel& model = models().female;
  for (int i = 0; i < 100; ++i) {
    const auto cat = static_cast<PoseCategory>(i % 3);
    const BodyParams p = sample_params(rng, cat, model);
    ASSERT_EQ(p.beta.size(), kNumBetas);
    ASSERT_EQ(p.theta.size(), kNumPoseParams);
    ASSERT_TRUE(p.flatten().allFinite());
    for (int k = 0; k < kNumPoseParams; ++k) {
      EXPECT_GE(p.theta[k], model.pose_limits(k, 0));
      EXPECT_LE(p.theta[k], model.pose_limits(k, 1));
    }
    EXPECT_LE(p.beta.cwiseAbs().maxCoeff(), SceneConfig{}.shape_range);
    const Eigen::Matrix3d r = rot6d_to_matrix(p.root_rot_x, p.root_rot_y);
    EXPECT_NEAR((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-12);
    const PosedMesh m = pose_mesh(model, p);
    EXPECT_GE(min_z(m), -1e-6);
    EXPECT_LE(min_z(m), 1e-6);
  }
}

TEST(RenderDepth, EmptyMeshIsBackground) {
  const SceneConfig sc;
  const PosedMesh empty = make_mesh({}, {});
  const DepthImage d = render_depth(empty, sc.depth_geom, Cover::Uncovered, sc);
  EXPECT_TRUE((d.values.array() == sc.camera_height_m).all());
  const DepthImage covered = render_depth(empty, sc.depth_geom, Cover::Cover2, sc);
  EXPECT_TRUE((covered.values.array() == sc.camera_height_m).all());
}

TEST(RenderDepth, BoxTopUnderInteriorPixel) {
  const SceneConfig sc;
  const ImageGeometry g{10, 10, 0.1, {0.0, 0.0}};
  const PosedMesh b = box({0.3, 0.3, 0.0}, {0.7, 0.7, 0.3});
  const DepthImage d = render_depth(b, g, Cover::Uncovered, sc);
  EXPECT_NEAR(d.values(5, 5), sc.camera_height_m - 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(d.values(0, 0), sc.camera_height_m);
}

TEST(RenderDepth, RandomMeshMatchesRayCast) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uxy(-0.1, 0.9), uz(0.0, 0.5);
  std::vector<Eigen::Vector3d> pts;
  std::vector<Eigen::Vector3i> tris;
  for (int t = 0; t < 40; ++t) {
    for (int k = 0; k < 3; ++k) pts.emplace_back(uxy(rng), uxy(rng), uz(rng));
    tris.emplace_back(3 * t, 3 * t + 1, 3 * t + 2);
  }
  const PosedMesh m = make_mesh(pts, tris);
  const SceneConfig sc;
  const ImageGeometry g{20, 16, 0.05, {0.0, 0.0}};
  const DepthImage d = render_depth(m, g, Cover::Uncovered, sc);
  int hits = 0;
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      const auto z = ray_cast(m, (c + 0.5) * g.pitch, (r + 0.5) * g.pitch);
      const double expected = sc.camera_height_m - (z ? std::max(*z, 0.0) : 0.0);
      hits += z.has_value();
      EXPECT_NEAR(d.values(r, c), expected, 1e-6) << r << "," << c;
    }
  EXPECT_GT(hits, 50);
}

TEST(RenderDepth, CoverMatchesBruteForceCone) {
  SceneConfig sc;
  sc.cover2 = {0.04, 0.8};
  const ImageGeometry g{40, 30, 0.02, {0.0, 0.0}};
  const PosedMesh b = box({0.25, 0.3, 0.0}, {0.35, 0.5, 0.2});
  const DepthImage bare = render_depth(b, g, Cover::Uncovered, sc);
  const DepthImage cov = render_depth(b, g, Cover::Cover2, sc);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      double sheet = 0.0, nearest = 1e9;
      for (int rr = 0; rr < g.rows; ++rr)
        for (int cc = 0; cc < g.cols; ++cc) {
          const double hq = sc.camera_height_m - bare.values(rr, cc);
          if (!(hq > 0.0)) continue;
          const double d = g.pitch * std::hypot(rr - r, cc - c);
          sheet = std::max(sheet, hq + sc.cover2.thickness_m - sc.cover2.slope * d);
          nearest = std::min(nearest, d);
        }
      const double body = sc.camera_height_m - bare.values(r, c);
      const double expected = sc.camera_height_m - std::max(body, sheet);
      // Chamfer steps overestimate off-axis distances by a few percent.
      const double tol = 1e-12 + 0.03 * sc.cover2.slope * nearest;
      EXPECT_LE(cov.values(r, c), bare.values(r, c));
      EXPECT_GE(cov.values(r, c), expected - 1e-12) << r << "," << c;
      EXPECT_LE(cov.values(r, c), expected + tol) << r << "," << c;
    }
}

TEST(RenderDepth, CoverLiesAboveBodyAndWithinRange) {
  const DatasetConfig cfg = small_config();
  const SceneSample s = make_sample(models(), cfg, 0, PoseCategory::Supine, Cover::Uncovered);
  const SceneConfig& sc = cfg.scene;
  const DepthImage bare = render_depth(s.gt_mesh, sc.depth_geom, Cover::Uncovered, sc);
  for (Cover cv : {Cover::Cover1, Cover::Cover2}) {
    const DepthImage cov = render_depth(s.gt_mesh, sc.depth_geom, cv, sc);
    EXPECT_TRUE((cov.values.array() <= bare.values.array()).all());
    EXPECT_GE(cov.values.minCoeff(), 0.0);
    EXPECT_LE(cov.values.maxCoeff(), sc.camera_height_m);
  }
  const DepthImage c1 = render_depth(s.gt_mesh, sc.depth_geom, Cover::Cover1, sc);
  const DepthImage c2 = render_depth(s.gt_mesh, sc.depth_geom, Cover::Cover2, sc);
  EXPECT_TRUE((c2.values.array() <= c1.values.array()).all());
  EXPECT_LT(c2.values.sum(), c1.values.sum());
}

TEST(VertexAreas, SumToSurfaceArea) {
  const PosedMesh p = plate(0.0, 0.0, 0.5, 6, 0.0);
  EXPECT_NEAR(vertex_areas(p).sum(), 0.25, 1e-12);
  const PosedMesh b = box({0, 0, 0}, {1, 2, 3});
  EXPECT_NEAR(vertex_areas(b).sum(), 2 * (2 + 3 + 6), 1e-12);
}

TEST(SimulatePressure, PlateConservesWeight) {
  const ImageGeometry g = SceneConfig{}.pressure_geom;
  const PosedMesh p = plate(0.2, 0.5, 0.4, 15, 0.0);
  const PressureImage img = simulate_pressure(p, g, 10.0);
  EXPECT_NEAR(img.values.sum() * g.cell_area() * 1000.0, 98.1, 1e-6);
  EXPECT_GE(img.values.minCoeff(), 0.0);
}

TEST(SimulatePressure, HoveringPlateHasNoContact) {
  const PosedMesh p = plate(0.2, 0.5, 0.4, 5, 0.2);
  try {
    simulate_pressure(p, SceneConfig{}.pressure_geom, 10.0);
    FAIL() << "expected NoContact";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoContact);
  }
}

TEST(SimulatePressure, RejectsNonPositiveMass) {
  const PosedMesh p = plate(0.2, 0.5, 0.4, 5, 0.0);
  EXPECT_THROW(simulate_pressure(p, SceneConfig{}.pressure_geom, 0.0), Error);
}

TEST(SimulatePressure, BodyMatchesVertexShareOracle) {
  const DatasetConfig cfg = small_config();
  const SceneSample s = make_sample(models(), cfg, 4, PoseCategory::LeftLateral, Cover::Uncovered);
  const ImageGeometry& g = cfg.scene.pressure_geom;
  const double eps = 0.005;
  const PressureImage img = simulate_pressure(s.gt_mesh, g, 70.0, eps);

  // Areas from scratch: one third of each incident triangle.
  const FaceArray& f = *s.gt_mesh.faces;
  std::vector<double> area(static_cast<std::size_t>(s.gt_mesh.num_vertices()), 0.0);
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    const Eigen::Vector3d a = s.gt_mesh.vertices.row(f(t, 0)), b = s.gt_mesh.vertices.row(f(t, 1)),
                          c = s.gt_mesh.vertices.row(f(t, 2));
    const double tri = 0.5 * (b - a).cross(c - a).norm();
    for (int k = 0; k < 3; ++k) area[static_cast<std::size_t>(f(t, k))] += tri / 3;
  }
  double contact_area = 0;
  for (int v = 0; v < s.gt_mesh.num_vertices(); ++v)
    if (s.gt_mesh.vertices(v, 2) <= eps) contact_area += area[static_cast<std::size_t>(v)];
  ImageArray force = ImageArray::Zero(g.rows, g.cols);
  double total = 0;
  for (int v = 0; v < s.gt_mesh.num_vertices(); ++v) {
    if (s.gt_mesh.vertices(v, 2) > eps) continue;
    const int col = static_cast<int>(std::floor(s.gt_mesh.vertices(v, 0) / g.pitch));
    const int row = static_cast<int>(std::floor(s.gt_mesh.vertices(v, 1) / g.pitch));
    const double share = 70.0 * kGravity * area[static_cast<std::size_t>(v)] / contact_area;
    if (row >= 0 && row < g.rows && col >= 0 && col < g.cols) {
      force(row, col) += share;
      total += share;
    }
  }
  EXPECT_NEAR((img.values * g.cell_area() * 1000.0 - force).cwiseAbs().maxCoeff(), 0.0, 1e-9);
  EXPECT_NEAR(total, 70.0 * kGravity, 1e-9 * total);
}

void expect_sample_invariants(const SceneSample& s, const DatasetConfig& cfg, const ModelSet& set = models()) {
  const VertexPressureMap vpm = project_gt(s.pressure, s.gt_mesh, cfg.scene.contact_eps_m);
  EXPECT_EQ(s.gt_vpm, vpm);
  EXPECT_EQ(s.gt_contact, contact_from_pressure(vpm));
  EXPECT_GT(s.gt_contact.sum(), 0.0);
  EXPECT_GE(s.depth.values.minCoeff(), 0.0);
  EXPECT_LE(s.depth.values.maxCoeff(), cfg.scene.camera_height_m);
  bool supported = true;
  for (int v = 0; v < s.gt_mesh.num_vertices(); ++v)
    if (s.gt_mesh.vertices(v, 2) <= cfg.scene.contact_eps_m &&
        !taxel_of_point({s.gt_mesh.vertices(v, 0), s.gt_mesh.vertices(v, 1)}, s.pressure.geom))
      supported = false;
  const double force = s.pressure.values.sum() * s.pressure.geom.cell_area() * 1000.0;
  const double weight = s.body_mass_kg * kGravity;
  if (supported) {
    EXPECT_NEAR(force, weight, 1e-6 * weight);
  } else {
    EXPECT_LT(force, weight);
  }
  const PosedMesh m = pose_mesh(set.get(s.gender), s.gt_params);
  EXPECT_EQ(m.vertices, s.gt_mesh.vertices);
  EXPECT_NEAR(min_z(s.gt_mesh), -cfg.scene.sink_depth_m, 1e-6);
}

TEST(MakeSample, DeterministicAndConsistent) {
  const DatasetConfig cfg = small_config();
  const SceneSample a = make_sample(models(), cfg, 3, PoseCategory::RightLateral, Cover::Cover1);
  const SceneSample b = make_sample(models(), cfg, 3, PoseCategory::RightLateral, Cover::Cover1);
  EXPECT_EQ(a.gt_params.flatten(), b.gt_params.flatten());
  EXPECT_EQ(a.depth.values, b.depth.values);
  EXPECT_EQ(a.pressure.values, b.pressure.values);
  const SceneSample c = make_sample(models(), cfg, 4, PoseCategory::RightLateral, Cover::Cover1);
  EXPECT_NE(a.gt_params.flatten(), c.gt_params.flatten());
}

TEST(MakeSample, EverySampleSatisfiesInvariants) {
  const DatasetConfig cfg = small_config(2);
  const auto samples = generate_samples(models(), cfg);
  ASSERT_EQ(samples.size(), 18u);
  for (const SceneSample& s : samples) expect_sample_invariants(s, cfg);
}

TEST(DatasetConfig, JsonRoundTrip) {
  DatasetConfig cfg = small_config(3);
  cfg.scene.pose_spread = 0.3;
  cfg.scene.cover2.thickness_m = 0.05;
  const DatasetConfig back = DatasetConfig::from_json_text(cfg.to_json_text());
  EXPECT_EQ(back.to_json_text(), cfg.to_json_text());
  EXPECT_EQ(back.total(), 27);
}

TEST(DatasetConfig, RejectsBadInput) {
  auto code_of = [](const std::string& text) {
    try {
      DatasetConfig::from_json_text(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of("{"), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"supine": {"uncovered": 1}}, "bogus": 1})"), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"sitting": {"uncovered": 1}}})"), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"supine": {"uncovered": -1}}})"), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"supine": {"uncovered": 0}}})"), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"supine": {"uncovered": 1}}, "scene": {"pose_spread": 2}})"),
            ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of(R"({"counts": {"supine": {"uncovered": 1}}, "model": {"n_v": 50}})"), ErrorCode::ConfigInvalid);
}

class DatasetDir : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = std::filesystem::temp_directory_path() /
            ("pressmap_synth_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(root_);
  }
  void TearDown() override { std::filesystem::remove_all(root_); }

  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::filesystem::path root_;
};

DatasetConfig ten_sample_config() {
  DatasetConfig c;
  c.seed = 21;
  c.model_vertices = 240;
  c.counts[PoseCategory::Supine][Cover::Uncovered] = 3;
  c.counts[PoseCategory::LeftLateral][Cover::Cover1] = 4;
  c.counts[PoseCategory::RightLateral][Cover::Cover2] = 3;
  return c;
}

TEST_F(DatasetDir, ManifestsAreIdenticalAcrossRuns) {
  const DatasetConfig cfg = ten_sample_config();
  const Manifest a = make_dataset(cfg, root_ / "a");
  const Manifest b = make_dataset(cfg, root_ / "b");
  ASSERT_EQ(a.entries.size(), 10u);
  EXPECT_EQ(slurp(root_ / "a" / "manifest.json"), slurp(root_ / "b" / "manifest.json"));
  for (const ManifestEntry& e : a.entries)
    for (const char* f : {"depth.pmt", "pressure.pmt", "params.pmt", "vertex_pressure.pmt"})
      EXPECT_EQ(slurp(root_ / "a" / "samples" / e.id / f), slurp(root_ / "b" / "samples" / e.id / f));
}

TEST_F(DatasetDir, SamplesRoundTripThroughDisk) {
  const DatasetConfig cfg = ten_sample_config();
  make_dataset(cfg, root_);
  const Manifest m = load_manifest(root_);
  ASSERT_EQ(m.entries.size(), 10u);
  EXPECT_EQ(m.config.to_json_text(), cfg.to_json_text());
  const ModelSet disk_models = load_models(root_);
  const ModelSet fresh = ModelSet::generate(cfg.model_vertices, cfg.model_seed);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const ManifestEntry& e = m.entries[i];
    const SceneSample s = load_sample(root_ / "samples" / e.id, disk_models);
    const SceneSample expected = make_sample(fresh, cfg, i, e.pose_category, e.cover);
    EXPECT_EQ(s.gender, e.gender);
    EXPECT_EQ(s.pose_category, e.pose_category);
    EXPECT_EQ(s.cover, e.cover);
    EXPECT_EQ(s.depth.values, expected.depth.values);
    EXPECT_EQ(s.pressure.values, expected.pressure.values);
    EXPECT_EQ(s.gt_params.flatten(), expected.gt_params.flatten());
    EXPECT_EQ(s.gt_mesh.vertices, expected.gt_mesh.vertices);
    EXPECT_EQ(s.gt_vpm, expected.gt_vpm);
    EXPECT_EQ(s.gt_contact, expected.gt_contact);
    ASSERT_TRUE(s.gt_mesh.faces);
    expect_sample_invariants(s, cfg, disk_models);
  }
}

TEST_F(DatasetDir, MissingManifestIsIoError) {
  try {
    load_manifest(root_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(SampleFilter, LateralOnlyExcludesSupine) {
  const DatasetConfig cfg = small_config();
  const auto samples = generate_samples(models(), cfg);
  const auto lateral = select(samples, SampleFilter::lateral_only());
  EXPECT_EQ(lateral.size(), 6u);
  for (std::size_t i : lateral) EXPECT_NE(samples[i].pose_category, PoseCategory::Supine);
  const auto supine = select(samples, SampleFilter::supine_only());
  EXPECT_EQ(supine.size(), 3u);
  SampleFilter covered{{}, std::vector{Cover::Cover2}};
  for (std::size_t i : select(samples, covered)) EXPECT_EQ(samples[i].cover, Cover::Cover2);
}

}  // namespace
}  // namespace pressmap
