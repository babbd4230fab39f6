#pragma once

#include <span>

#include "pressmap/autodiff.hpp"
#include "pressmap/sample.hpp"

namespace pressmap {

inline constexpr double kSigmaFloor = 1e-8;
inline constexpr double kProbClamp = 1e-7;

// Population standard deviations of the ground truth, pooled over samples and components.
struct NormStats {
  double sigma_beta = 1.0;
  double sigma_theta = 1.0;
  double sigma_yx = 1.0;
  double sigma_s = 1.0;
  double sigma_v = 1.0;
  double sigma_p = 1.0;
  double sigma_c = 1.0;
};

struct LossWeights {
  double lambda1 = 0.25;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double lambda_ws = 500.0;
};

// Throws EmptyDataset.
NormStats compute_stats(std::span<const SceneSample> samples);

// Supervised component values of one sample.
struct SupervisedLosses {
  double smpl = 0.0;
  double v2v = 0.0;
  double p3d = 0.0;
  double contact = 0.0;
};

namespace ad {

// pred_psi [88], pred_joints [24 x 3].
Var loss_smpl(Var pred_psi, Var pred_joints, const BodyParams& gt, const MatX3& gt_joints, const NormStats& stats);
Var loss_v2v(Var pred_vertices, const MatX3& gt_vertices, const NormStats& stats);
Var loss_p3d(Var pred_pressure, const VertexPressureMap& gt, const NormStats& stats);
// pred_prob must already be a probability; it is clamped before the logs.
Var loss_contact(Var pred_prob, const VertexContact& gt, const NormStats& stats);
Var loss_total_supervised(Var smpl, Var v2v, Var p3d, Var contact, const LossWeights& w);
Var loss_p2d(Var projected, const PressureImage& sensed);
// Mean squared predicted pressure over vertices above the mattress plane (z > 0).
Var loss_preg(Var pred_pressure, const PosedMesh& mesh);
Var loss_total_ws(Var p2d, Var preg, const LossWeights& w);

}  // namespace ad

double loss_smpl(const BodyParams& pred, const MatX3& pred_joints, const BodyParams& gt, const MatX3& gt_joints,
                 const NormStats& stats);
double loss_v2v(const MatX3& pred, const MatX3& gt, const NormStats& stats);
double loss_p3d(const VertexPressureMap& pred, const VertexPressureMap& gt, const NormStats& stats);
double loss_contact(const Eigen::VectorXd& pred_prob, const VertexContact& gt, const NormStats& stats);
// Throws NonFinite.
double loss_total_supervised(const SupervisedLosses& c, const LossWeights& w);
// Throws GeometryMismatch.
double loss_p2d(const PressureImage& projected, const PressureImage& sensed);
double loss_preg(const VertexPressureMap& pred, const PosedMesh& mesh);
double loss_total_ws(double p2d, double preg, const LossWeights& w);

}  // namespace pressmap
