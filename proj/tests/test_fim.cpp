#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "pressmap/error.hpp"
#include "pressmap/fim.hpp"

namespace pressmap {
namespace {

const ImageGeometry kGeom{6, 4, 0.1, {0.2, -0.1}};

MatX3 random_vertices(int n, std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  MatX3 v(n, 3);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng);
  return v;
}

Tensor random_map(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t(std::move(shape));
  for (double& x : t.data) x = n(rng);
  return t;
}

TEST(Register, OriginAndClamp) {
  MatX3 v(3, 3);
  v << 0.2, -0.1, 0.0,  //
      -0.8, 0.15, 0.0,  //
      5.0, 9.0, 1.0;
  const Eigen::MatrixX2i pix = register_vertices(v, kGeom);
  EXPECT_EQ(pix.row(0), Eigen::RowVector2i(0, 0));
  EXPECT_EQ(pix.row(1), Eigen::RowVector2i(2, 0));
  EXPECT_EQ(pix.row(2), Eigen::RowVector2i(5, 3));
}

TEST(Register, MatchesBinAndClampOracle) {
  std::mt19937_64 rng(1);
  const MatX3 v = random_vertices(500, rng);
  const Eigen::MatrixX2i pix = register_vertices(v, kGeom);
  for (int i = 0; i < 500; ++i) {
    // Scan for the containing cell in the infinite grid, then clamp.
    int row = 0, col = 0;
    while (kGeom.origin.y() + (row + 1) * kGeom.pitch <= v(i, 1)) ++row;
    while (kGeom.origin.y() + row * kGeom.pitch > v(i, 1)) --row;
    while (kGeom.origin.x() + (col + 1) * kGeom.pitch <= v(i, 0)) ++col;
    while (kGeom.origin.x() + col * kGeom.pitch > v(i, 0)) --col;
    EXPECT_EQ(pix(i, 0), std::clamp(row, 0, kGeom.rows - 1));
    EXPECT_EQ(pix(i, 1), std::clamp(col, 0, kGeom.cols - 1));
  }
}

TEST(Gather, ConstantAndOneHot) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixX2i pix = register_vertices(random_vertices(50, rng), kGeom);
  Tensor constant({2, 6, 4}, 4.5);
  EXPECT_TRUE((gather(constant, pix).array() == 4.5).all());
  Tensor hot({1, 6, 4});
  hot.at(0, 3, 2) = 1.0;
  Eigen::MatrixX2i two(2, 2);
  two << 3, 2, 1, 1;
  const Eigen::MatrixXd g = gather(hot, two);
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g(1, 0), 0.0);
}

TEST(Gather, UnclampedIndexThrows) {
  Eigen::MatrixX2i bad(1, 2);
  bad << 6, 0;
  try {
    gather(Tensor({1, 6, 4}), bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(Gather, VjpMatchesFiniteDifferencesAndAdjoint) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixX2i pix = register_vertices(random_vertices(30, rng), kGeom);
  const Tensor map = random_map({3, 6, 4}, rng);
  Eigen::MatrixXd up(30, 3);
  std::normal_distribution<double> n;
  for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = n(rng);
  const Tensor g = gather_vjp(up, pix, map.shape);
  Tensor fd(map.shape);
  for (std::size_t i = 0; i < map.size(); ++i) {
    Tensor p = map, m = map;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    fd[i] = ((up.array() * gather(p, pix).array()).sum() - (up.array() * gather(m, pix).array()).sum()) / 2e-6;
  }
  double diff = 0, norm = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    diff += (fd[i] - g[i]) * (fd[i] - g[i]);
    norm += g[i] * g[i];
  }
  EXPECT_LT(std::sqrt(diff / norm), 1e-6);
  double rhs = 0;
  for (std::size_t i = 0; i < map.size(); ++i) rhs += g[i] * map[i];
  EXPECT_NEAR((up.array() * gather(map, pix).array()).sum(), rhs, 1e-9);
}

TEST(Gather, PermutationEquivariant) {
  std::mt19937_64 rng(4);
  const MatX3 v = random_vertices(40, rng);
  const Tensor map = random_map({2, 6, 4}, rng);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  MatX3 pv(40, 3);
  for (int i = 0; i < 40; ++i) pv.row(i) = v.row(perm[i]);
  const Eigen::MatrixXd a = gather(map, register_vertices(v, kGeom));
  const Eigen::MatrixXd b = gather(map, register_vertices(pv, kGeom));
  for (int i = 0; i < 40; ++i) EXPECT_EQ(b.row(i), a.row(perm[i]));
}

TEST(Fuse, LayoutContract) {
  std::mt19937_64 rng(5);
  PosedMesh mesh;
  mesh.vertices = random_vertices(10, rng);
  const VertexFeatureMatrix only = fuse(mesh, std::nullopt, std::nullopt, {true, false, false, false});
  EXPECT_EQ(only.features.cols(), 3);
  EXPECT_EQ(only.features, Eigen::MatrixXd(mesh.vertices));

  const Eigen::MatrixXd img = Eigen::MatrixXd::Random(10, 2);
  const Eigen::MatrixXd lat = Eigen::MatrixXd::Random(10, 8);
  const VertexFeatureMatrix two = fuse(mesh, img, std::nullopt, {true, true, false, false});
  EXPECT_EQ(two.features.cols(), 5);
  EXPECT_EQ(two.features.col(3), img.col(0));
  EXPECT_EQ(two.features.col(4), img.col(1));

  const VertexFeatureMatrix all = fuse(mesh, img, lat, {true, true, true, true});
  ASSERT_EQ(all.features.cols(), 13);
  for (int v = 0; v < 10; ++v) {
    std::vector<double> manual;
    for (int k = 0; k < 3; ++k) manual.push_back(mesh.vertices(v, k));
    for (int k = 0; k < 2; ++k) manual.push_back(img(v, k));
    for (int k = 0; k < 8; ++k) manual.push_back(lat(v, k));
    for (int k = 0; k < 13; ++k) EXPECT_EQ(all.features(v, k), manual[static_cast<std::size_t>(k)]);
  }
  ASSERT_EQ(all.layout.size(), 3u);
  EXPECT_EQ(all.layout[0].name, "vertex_xyz");
  EXPECT_EQ(all.layout[2].width, 8);
}

TEST(Fuse, NoFeaturesThrows) {
  PosedMesh mesh;
  mesh.vertices = MatX3::Zero(2, 3);
  try {
    fuse(mesh, std::nullopt, std::nullopt, {false, false, false, false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFeaturesEnabled);
  }
}

TEST(Toggles, SubsetsAndLabels) {
  const auto subsets = all_toggle_subsets();
  ASSERT_EQ(subsets.size(), 15u);
  for (const auto& t : subsets) EXPECT_EQ(FimToggles::parse(t.label()), t);
  EXPECT_THROW(FimToggles::parse("xyz+colour"), Error);
}

}  // namespace
}  // namespace pressmap
