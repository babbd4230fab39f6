#include "pressmap/gradcheck_suite.hpp"

#include <random>
#include <string>

#include "pressmap/convert.hpp"
#include "pressmap/losses.hpp"
#include "pressmap/network.hpp"
#include "pressmap/toy_model.hpp"

namespace pressmap {
namespace {

using ad::Graph;
using ad::Tape;
using ad::Var;

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed), seed_(seed) {}

  Tensor random(Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (double& x : t.data) x = u(rng_);
    return t;
  }

  void check(const std::string& name, const Graph& f, const std::vector<Tensor>& inputs,
             double tolerance = kOpTolerance, std::size_t max_coords = 0) {
    results_.push_back(ad::check_gradient(name, f, inputs, tolerance, seed_ + results_.size(), 1e-6, max_coords));
  }

  std::mt19937_64& rng() { return rng_; }
  std::vector<ad::GradcheckResult> take() { return std::move(results_); }

 private:
  std::mt19937_64 rng_;
  std::uint64_t seed_;
  std::vector<ad::GradcheckResult> results_;
};

void elementwise_ops(Suite& s) {
  const Tensor a = s.random({3, 4}), b = s.random({3, 4}), pos = s.random({3, 4}, 0.2, 2.0);
  s.check("add", [](Tape&, std::span<const Var> v) { return ad::add(v[0], v[1]); }, {a, b});
  s.check("sub", [](Tape&, std::span<const Var> v) { return ad::sub(v[0], v[1]); }, {a, b});
  s.check("mul", [](Tape&, std::span<const Var> v) { return ad::mul(v[0], v[1]); }, {a, b});
  s.check("scale", [](Tape&, std::span<const Var> v) { return ad::scale(v[0], -2.5); }, {a});
  s.check("add_scalar", [](Tape&, std::span<const Var> v) { return ad::add_scalar(v[0], 0.7); }, {a});
  s.check("relu", [](Tape&, std::span<const Var> v) { return ad::relu(v[0]); }, {a});
  s.check("sigmoid", [](Tape&, std::span<const Var> v) { return ad::sigmoid(v[0]); }, {a});
  s.check("log", [](Tape&, std::span<const Var> v) { return ad::log(v[0]); }, {pos});
  s.check("abs", [](Tape&, std::span<const Var> v) { return ad::abs(v[0]); }, {a});
  s.check("square", [](Tape&, std::span<const Var> v) { return ad::square(v[0]); }, {a});
  s.check("clamp", [](Tape&, std::span<const Var> v) { return ad::clamp(v[0], -0.5, 0.5); }, {a});
  s.check("sum", [](Tape&, std::span<const Var> v) { return ad::sum(v[0]); }, {a});
  s.check("mean", [](Tape&, std::span<const Var> v) { return ad::mean(v[0]); }, {a});
}

void layer_ops(Suite& s) {
  s.check("dense", [](Tape&, std::span<const Var> v) { return ad::dense(v[0], v[1], v[2]); },
          {s.random({5, 4}), s.random({4, 3}), s.random({3})});
  for (int stride : {1, 2}) {
    s.check("conv2d/stride" + std::to_string(stride),
            [stride](Tape&, std::span<const Var> v) { return ad::conv2d(v[0], v[1], v[2], stride, 1); },
            {s.random({2, 7, 6}), s.random({3, 2, 3, 3}), s.random({3})});
  }
  s.check("global_avg_pool", [](Tape&, std::span<const Var> v) { return ad::global_avg_pool(v[0]); },
          {s.random({3, 4, 5})});
  s.check("max_pool_rows", [](Tape&, std::span<const Var> v) { return ad::max_pool_rows(v[0]); },
          {s.random({6, 4})});
  s.check("row_norms", [](Tape&, std::span<const Var> v) { return ad::row_norms(v[0]); }, {s.random({6, 3})});
}

void structural_ops(Suite& s) {
  const Tensor a = s.random({4, 3}), b = s.random({4, 2}), v = s.random({3});
  s.check("concat_cols", [](Tape&, std::span<const Var> x) { return ad::concat_cols(x[0], x[1]); }, {a, b});
  s.check("broadcast_rows", [](Tape&, std::span<const Var> x) { return ad::broadcast_rows(x[0], 5); }, {v});
  s.check("slice_rows", [](Tape&, std::span<const Var> x) { return ad::slice_rows(x[0], 1, 2); }, {a});
  s.check("slice_cols", [](Tape&, std::span<const Var> x) { return ad::slice_cols(x[0], 1, 2); }, {a});
  s.check("slice", [](Tape&, std::span<const Var> x) { return ad::slice(x[0], 2, 7); }, {a});
  s.check("concat", [](Tape&, std::span<const Var> x) { return ad::concat(x); }, {a, b, v});
  s.check("reshape", [](Tape&, std::span<const Var> x) { return ad::reshape(x[0], {3, 4}); }, {a});
  Eigen::MatrixX2i pix(6, 2);
  std::uniform_int_distribution<int> ur(0, 3), uc(0, 4);
  for (int i = 0; i < pix.rows(); ++i) pix.row(i) << ur(s.rng()), uc(s.rng());
  pix.row(5) = pix.row(0);
  s.check("gather", [pix](Tape&, std::span<const Var> x) { return ad::gather(x[0], pix); }, {s.random({3, 4, 5})});
}

BodyParams lying_params(std::mt19937_64& rng, double spread) {
  std::normal_distribution<double> n(0.0, spread);
  BodyParams p;
  for (auto& x : p.beta) x = n(rng);
  for (auto& x : p.theta) x = n(rng);
  p.root_rot_x += Eigen::Vector3d(n(rng), n(rng), n(rng));
  p.root_rot_y += Eigen::Vector3d(n(rng), n(rng), n(rng));
  return p;
}

ImageGeometry covering_grid(const MatX3& v, int rows, int cols) {
  const Eigen::Vector2d lo = v.leftCols<2>().colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = v.leftCols<2>().colwise().maxCoeff().transpose();
  const double pitch = 1.05 * std::max((hi.x() - lo.x()) / cols, (hi.y() - lo.y()) / rows);
  const Eigen::Vector2d mid = 0.5 * (lo + hi);
  return {rows, cols, pitch, mid - 0.5 * pitch * Eigen::Vector2d(cols, rows)};
}

void geometry_ops(Suite& s, const BodyModel& model) {
  const Eigen::VectorXd psi0 = lying_params(s.rng(), 0.3).flatten();
  s.check("pose_mesh", [&model](Tape&, std::span<const Var> v) { return ad::pose_mesh(v[0], model); },
          {to_tensor(psi0)});
  const PosedMesh mesh = pose_mesh(model, BodyParams::unflatten({psi0.data(), static_cast<std::size_t>(psi0.size())}));
  const ImageGeometry geom = covering_grid(mesh.vertices, 12, 8);
  s.check("reproject_2d", [&mesh, geom](Tape&, std::span<const Var> v) { return ad::reproject_2d(v[0], mesh, geom); },
          {s.random({static_cast<std::size_t>(mesh.num_vertices())}, 0.0, 5.0)});
}

NormStats random_stats(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 2.0);
  return {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
}

MatX3 random_points(int n, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> d(0.0, spread);
  MatX3 m(n, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void losses(Suite& s) {
  std::mt19937_64& rng = s.rng();
  const int n = 40;
  const NormStats st = random_stats(rng);
  const BodyParams gt = lying_params(rng, 1.0);
  const MatX3 gt_joints = random_points(kNumJoints, rng);
  const MatX3 gt_v = random_points(n, rng);
  const Eigen::VectorXd gt_p = random_vector(n, rng, 0.0, 8.0);
  const Eigen::VectorXd gt_c = (gt_p.array() > 4.0).cast<double>();
  PosedMesh mesh;
  mesh.vertices = random_points(n, rng);
  const ImageGeometry g{5, 4, 0.1, {0.0, 0.0}};
  const PressureImage sensed{g, ImageArray(random_vector(20, rng, 0.0, 3.0).reshaped(5, 4))};

  s.check("loss_smpl",
          [&](Tape&, std::span<const Var> v) { return ad::loss_smpl(v[0], v[1], gt, gt_joints, st); },
          {to_tensor(lying_params(rng, 1.0).flatten()), to_tensor(random_points(kNumJoints, rng))});
  s.check("loss_v2v", [&](Tape&, std::span<const Var> v) { return ad::loss_v2v(v[0], gt_v, st); },
          {to_tensor(random_points(n, rng))});
  s.check("loss_p3d", [&](Tape&, std::span<const Var> v) { return ad::loss_p3d(v[0], gt_p, st); },
          {to_tensor(random_vector(n, rng, -2.0, 9.0))});
  s.check("loss_contact", [&](Tape&, std::span<const Var> v) { return ad::loss_contact(v[0], gt_c, st); },
          {to_tensor(random_vector(n, rng, 0.05, 0.95))});
  s.check("loss_p2d", [&](Tape&, std::span<const Var> v) { return ad::loss_p2d(v[0], sensed); },
          {s.random({5, 4})});
  s.check("loss_preg", [&](Tape&, std::span<const Var> v) { return ad::loss_preg(v[0], mesh); },
          {to_tensor(random_vector(n, rng, -3.0, 3.0))});
  const LossWeights w;
  s.check("loss_total_supervised",
          [w](Tape&, std::span<const Var> v) { return ad::loss_total_supervised(v[0], v[1], v[2], v[3], w); },
          {s.random({1}), s.random({1}), s.random({1}), s.random({1})});
  s.check("loss_total_ws", [w](Tape&, std::span<const Var> v) { return ad::loss_total_ws(v[0], v[1], w); },
          {s.random({1}), s.random({1})});
}

NetConfig small_net_config(std::uint64_t seed) {
  NetConfig c;
  c.input_geom = {16, 8, 0.12, {0.0, 0.0}};
  c.channels = {4, 6};
  c.strides = {1, 2};
  c.mesh_hidden = 12;
  c.point_hidden = 8;
  c.seed = seed;
  return c;
}

// Replaces every parameter (including zero-initialized ones) with small random values.
void randomize(ParamSet& p, Suite& s, double scale) {
  for (NamedTensor& t : p.tensors) t.value = s.random(t.value.shape, -scale, scale);
}

std::vector<Tensor> values(const ParamSet& p) {
  std::vector<Tensor> out;
  for (const NamedTensor& t : p.tensors) out.push_back(t.value);
  return out;
}

void supervised_composite(Suite& s, const BodyModel& model, std::uint64_t seed) {
  BodyMapNet net = BodyMapNet::init(small_net_config(seed));
  randomize(net.point.params, s, 0.3);
  net.psi_offset = BodyParams().flatten();
  net.psi_offset.segment<3>(kParamTransOffset) << 0.48, 0.96, 0.0;
  net.psi_scale.setConstant(0.05);

  std::mt19937_64& rng = s.rng();
  const NormStats st = random_stats(rng);
  const BodyParams gt = lying_params(rng, 0.2);
  const PosedMesh gt_mesh = pose_mesh(model, gt);
  const Eigen::VectorXd gt_p = random_vector(model.num_vertices(), rng, 0.0, 8.0);
  const Eigen::VectorXd gt_c = (gt_p.array() > 4.0).cast<double>();
  const Tensor input = s.random({2, 16, 8}, 0.0, 1.0);
  const std::size_t ne = net.encoder.size(), nm = net.mesh_head.size();

  std::vector<Tensor> inputs = values(net.encoder);
  for (Tensor& t : values(net.mesh_head)) inputs.push_back(std::move(t));
  for (Tensor& t : values(net.point.params)) inputs.push_back(std::move(t));
  const LossWeights w;
  s.check(
      "supervised_end_to_end",
      [&, ne, nm](Tape& tape, std::span<const Var> v) {
        BodyMapBindings b;
        b.encoder.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(ne));
        b.mesh_head.assign(v.begin() + static_cast<std::ptrdiff_t>(ne),
                           v.begin() + static_cast<std::ptrdiff_t>(ne + nm));
        b.point.assign(v.begin() + static_cast<std::ptrdiff_t>(ne + nm), v.end());
        const BodyMapVars o = forward_bodymap(tape, net, b, input, Gender::Female, model);
        return ad::loss_total_supervised(ad::loss_smpl(o.psi, o.joints, gt, gt_mesh.joints, st),
                                         ad::loss_v2v(o.vertices, gt_mesh.vertices, st),
                                         ad::loss_p3d(o.pressure, gt_p, st), ad::loss_contact(o.contact_prob, gt_c, st),
                                         w);
      },
      inputs, kCompositeTolerance, 24);
}

void ws_composite(Suite& s, const BodyModel& model, std::uint64_t seed) {
  const NetConfig cfg = small_net_config(seed);
  WsNet net = WsNet::init(cfg);
  randomize(net.point.params, s, 0.3);

  FrozenMeshOutputs frozen;
  BodyParams p = lying_params(s.rng(), 0.2);
  p.root_trans << 0.48, 0.96, 0.0;
  frozen.mesh = pose_mesh(model, p);
  frozen.input = s.random({2, 16, 8}, 0.0, 1.0);
  const ImageGeometry lg = cfg.latent_geom();
  frozen.latent = s.random({static_cast<std::size_t>(cfg.latent_channels()), static_cast<std::size_t>(lg.rows),
                            static_cast<std::size_t>(lg.cols)},
                           0.0, 1.0);
  frozen.global = s.random({static_cast<std::size_t>(cfg.latent_channels())}, 0.0, 1.0);
  const PressureImage sensed{cfg.input_geom, ImageArray(to_vector(s.random({16 * 8}, 0.0, 4.0)).reshaped(16, 8))};
  const LossWeights w;
  s.check(
      "ws_end_to_end",
      [&](Tape& tape, std::span<const Var> v) {
        const Var pressure = forward_bodymap_ws(tape, net, v, frozen);
        const Var projected = ad::reproject_2d(pressure, frozen.mesh, sensed.geom);
        return ad::loss_total_ws(ad::loss_p2d(projected, sensed), ad::loss_preg(pressure, frozen.mesh), w);
      },
      values(net.point.params), kCompositeTolerance, 24);
}

}  // namespace

std::vector<ad::GradcheckResult> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  const BodyModel model = generate_toy_model({220, seed + 2, Gender::Female});
  elementwise_ops(s);
  layer_ops(s);
  structural_ops(s);
  geometry_ops(s, model);
  losses(s);
  supervised_composite(s, model, seed);
  ws_composite(s, model, seed);
  return s.take();
}

}  // namespace pressmap
