#include "pressmap/losses.hpp"

#include <cmath>

#include "pressmap/convert.hpp"
#include "pressmap/error.hpp"
#include "running_std.hpp"

namespace pressmap {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, std::string(what) + " is not finite");
}

}  // namespace

NormStats compute_stats(std::span<const SceneSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "cannot compute statistics of an empty dataset");
  detail::RunningStd beta, theta, yx, s, v, p, c;
  for (const SceneSample& x : samples) {
    beta.add_all(x.gt_params.beta);
    theta.add_all(x.gt_params.theta);
    yx.add_all(x.gt_params.root_rot_x);
    yx.add_all(x.gt_params.root_rot_y);
    s.add_all(x.gt_mesh.joints.reshaped());
    v.add_all(x.gt_mesh.vertices.reshaped());
    p.add_all(x.gt_vpm);
    c.add_all(x.gt_contact);
  }
  return {beta.sigma(), theta.sigma(), yx.sigma(), s.sigma(), v.sigma(), p.sigma(), c.sigma()};
}

namespace ad {

Var loss_smpl(Var pred_psi, Var pred_joints, const BodyParams& gt, const MatX3& gt_joints, const NormStats& stats) {
  require_size(pred_psi.size(), kNumParams, "loss_smpl parameters");
  require_size(pred_joints.size(), kNumJoints * 3, "loss_smpl joints");
  require_size(static_cast<std::size_t>(gt_joints.rows()), kNumJoints, "loss_smpl ground-truth joints");
  require_size(static_cast<std::size_t>(gt.beta.size()), kNumBetas, "loss_smpl ground-truth beta");
  require_size(static_cast<std::size_t>(gt.theta.size()), kNumPoseParams, "loss_smpl ground-truth theta");
  Tape& t = *pred_psi.tape;
  const Tensor gt_psi = to_tensor(gt.flatten());
  auto l1 = [&](std::size_t start, std::size_t len, double denom) {
    const Var p = slice(pred_psi, start, len);
    const Var g = t.constant(Tensor({len}, std::vector<double>(gt_psi.data.begin() + static_cast<std::ptrdiff_t>(start),
                                                             gt_psi.data.begin() + static_cast<std::ptrdiff_t>(start + len))));
    return scale(sum(abs(sub(p, g))), 1.0 / denom);
  };
  const Var l_beta = l1(kParamBetaOffset, kNumBetas, kNumBetas * stats.sigma_beta);
  const Var l_theta = l1(kParamThetaOffset, kNumPoseParams, kNumPoseParams * stats.sigma_theta);
  const Var l_rot = l1(kParamRotXOffset, 6, 6 * stats.sigma_yx);
  const Var joints = reshape(pred_joints, {kNumJoints, 3});
  const Var l_joints =
      scale(sum(row_norms(sub(joints, t.constant(to_tensor(gt_joints))))), 1.0 / (kNumJoints * stats.sigma_s));
  return add(add(l_beta, l_theta), add(l_rot, l_joints));
}

Var loss_v2v(Var pred_vertices, const MatX3& gt_vertices, const NormStats& stats) {
  require_size(pred_vertices.size(), static_cast<std::size_t>(gt_vertices.size()), "loss_v2v");
  const double n = static_cast<double>(gt_vertices.rows());
  const Var diff = sub(reshape(pred_vertices, {static_cast<std::size_t>(gt_vertices.rows()), 3}),
                       pred_vertices.tape->constant(to_tensor(gt_vertices)));
  return scale(sum(row_norms(diff)), 1.0 / (n * stats.sigma_v));
}

Var loss_p3d(Var pred_pressure, const VertexPressureMap& gt, const NormStats& stats) {
  require_size(pred_pressure.size(), static_cast<std::size_t>(gt.size()), "loss_p3d");
  const Var diff = sub(reshape(pred_pressure, {pred_pressure.size()}), pred_pressure.tape->constant(to_tensor(gt)));
  return scale(sum(abs(diff)), 1.0 / (static_cast<double>(gt.size()) * stats.sigma_p));
}

Var loss_contact(Var pred_prob, const VertexContact& gt, const NormStats& stats) {
  require_size(pred_prob.size(), static_cast<std::size_t>(gt.size()), "loss_contact");
  Tape& t = *pred_prob.tape;
  const Var p = clamp(reshape(pred_prob, {pred_prob.size()}), kProbClamp, 1.0 - kProbClamp);
  const Var y = t.constant(to_tensor(gt));
  const Var one_minus_y = t.constant(to_tensor(Eigen::VectorXd((1.0 - gt.array()).matrix())));
  const Var ll = add(mul(y, log(p)), mul(one_minus_y, log(add_scalar(scale(p, -1.0), 1.0))));
  return scale(sum(ll), -1.0 / (static_cast<double>(gt.size()) * stats.sigma_c));
}

Var loss_total_supervised(Var smpl, Var v2v, Var p3d, Var contact, const LossWeights& w) {
  for (Var c : {smpl, v2v, p3d, contact}) require_finite(c.value()[0], "supervised loss component");
  return add(add(smpl, scale(v2v, w.lambda1)), add(scale(p3d, w.lambda2), scale(contact, w.lambda3)));
}

Var loss_p2d(Var projected, const PressureImage& sensed) {
  const Shape want{static_cast<std::size_t>(sensed.geom.rows), static_cast<std::size_t>(sensed.geom.cols)};
  if (projected.shape() != want) {
    throw Error(ErrorCode::GeometryMismatch,
                "loss_p2d: projected " + shape_string(projected.shape()) + " vs sensed " + shape_string(want));
  }
  return mean(square(sub(projected, projected.tape->constant(to_tensor(sensed.values)))));
}

Var loss_preg(Var pred_pressure, const PosedMesh& mesh) {
  require_size(pred_pressure.size(), static_cast<std::size_t>(mesh.num_vertices()), "loss_preg");
  Tensor mask({pred_pressure.size()});
  double count = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertices(v, 2) > 0.0) {
      mask[static_cast<std::size_t>(v)] = 1.0;
      count += 1.0;
    }
  }
  const Var masked = mul(reshape(pred_pressure, {pred_pressure.size()}), pred_pressure.tape->constant(std::move(mask)));
  return scale(sum(square(masked)), count > 0 ? 1.0 / count : 0.0);
}

Var loss_total_ws(Var p2d, Var preg, const LossWeights& w) {
  require_finite(p2d.value()[0], "L_P2D");
  require_finite(preg.value()[0], "L_Preg");
  return add(p2d, scale(preg, w.lambda_ws));
}

}  // namespace ad

double loss_smpl(const BodyParams& pred, const MatX3& pred_joints, const BodyParams& gt, const MatX3& gt_joints,
                 const NormStats& stats) {
  require_size(static_cast<std::size_t>(pred.beta.size()), kNumBetas, "loss_smpl beta");
  require_size(static_cast<std::size_t>(pred.theta.size()), kNumPoseParams, "loss_smpl theta");
  ad::Tape t;
  return ad::loss_smpl(t.constant(to_tensor(pred.flatten())), t.constant(to_tensor(pred_joints)), gt, gt_joints, stats)
      .value()[0];
}

double loss_v2v(const MatX3& pred, const MatX3& gt, const NormStats& stats) {
  ad::Tape t;
  return ad::loss_v2v(t.constant(to_tensor(pred)), gt, stats).value()[0];
}

double loss_p3d(const VertexPressureMap& pred, const VertexPressureMap& gt, const NormStats& stats) {
  ad::Tape t;
  return ad::loss_p3d(t.constant(to_tensor(pred)), gt, stats).value()[0];
}

double loss_contact(const Eigen::VectorXd& pred_prob, const VertexContact& gt, const NormStats& stats) {
  ad::Tape t;
  return ad::loss_contact(t.constant(to_tensor(pred_prob)), gt, stats).value()[0];
}

double loss_total_supervised(const SupervisedLosses& c, const LossWeights& w) {
  for (double x : {c.smpl, c.v2v, c.p3d, c.contact}) require_finite(x, "supervised loss component");
  return c.smpl + w.lambda1 * c.v2v + w.lambda2 * c.p3d + w.lambda3 * c.contact;
}

double loss_p2d(const PressureImage& projected, const PressureImage& sensed) {
  if (!(projected.geom == sensed.geom) || projected.values.rows() != sensed.values.rows() ||
      projected.values.cols() != sensed.values.cols()) {
    throw Error(ErrorCode::GeometryMismatch, "loss_p2d: images have different geometry");
  }
  ad::Tape t;
  return ad::loss_p2d(t.constant(to_tensor(projected.values)), sensed).value()[0];
}

double loss_preg(const VertexPressureMap& pred, const PosedMesh& mesh) {
  ad::Tape t;
  return ad::loss_preg(t.constant(to_tensor(pred)), mesh).value()[0];
}

double loss_total_ws(double p2d, double preg, const LossWeights& w) {
  require_finite(p2d, "L_P2D");
  require_finite(preg, "L_Preg");
  return p2d + w.lambda_ws * preg;
}

}  // namespace pressmap
