#include "pressmap/metrics.hpp"

#include <cmath>

#include "pressmap/error.hpp"

namespace pressmap {

namespace {

void require_same_rows(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b) + " entries");
  }
}

double mean_row_distance(const MatX3& a, const MatX3& b) {
  if (a.rows() == 0) return 0.0;
  return (a - b).rowwise().norm().mean();
}

}  // namespace

double mpjpe(const MatX3& pred_joints, const MatX3& gt_joints) {
  require_same_rows(pred_joints.rows(), gt_joints.rows(), "mpjpe");
  require_same_rows(pred_joints.rows(), kNumJoints, "mpjpe joint count");
  return 1000.0 * mean_row_distance(pred_joints, gt_joints);
}

double pve(const MatX3& pred_vertices, const MatX3& gt_vertices) {
  require_same_rows(pred_vertices.rows(), gt_vertices.rows(), "pve");
  return 1000.0 * mean_row_distance(pred_vertices, gt_vertices);
}

ShapeErrors shape_errors(const Eigen::VectorXd& pred_beta, const Eigen::VectorXd& gt_beta, const BodyModel& model) {
  const Measurements p = anatomical_measurements(rest_pose_mesh(model, pred_beta), model);
  const Measurements g = anatomical_measurements(rest_pose_mesh(model, gt_beta), model);
  return {100.0 * std::abs(p.height_m - g.height_m), 100.0 * std::abs(p.chest_m - g.chest_m),
          100.0 * std::abs(p.waist_m - g.waist_m), 100.0 * std::abs(p.hips_m - g.hips_m)};
}

double v2vp(const VertexPressureMap& pred, const VertexPressureMap& gt) {
  require_same_rows(pred.size(), gt.size(), "v2vp");
  if (pred.size() == 0) return 0.0;
  return (pred - gt).squaredNorm() / static_cast<double>(pred.size());
}

VertexPressureMap smooth_kring(const VertexPressureMap& vpm, const std::vector<std::vector<int>>& neighbors) {
  require_same_rows(vpm.size(), static_cast<Eigen::Index>(neighbors.size()), "smooth_kring");
  VertexPressureMap out(vpm.size());
  for (Eigen::Index v = 0; v < vpm.size(); ++v) {
    // Offsets from the center keep constant neighborhoods exact.
    double s = 0.0;
    for (int w : neighbors[static_cast<std::size_t>(v)]) s += vpm[w] - vpm[v];
    out[v] = vpm[v] + s / static_cast<double>(neighbors[static_cast<std::size_t>(v)].size() + 1);
  }
  return out;
}

double v2vp_smoothed(const VertexPressureMap& pred, const VertexPressureMap& gt,
                     const std::vector<std::vector<int>>& neighbors) {
  return v2vp(smooth_kring(pred, neighbors), smooth_kring(gt, neighbors));
}

PartValues per_part_v2vp(const VertexPressureMap& pred, const VertexPressureMap& gt,
                         const std::vector<PartMask>& masks) {
  require_same_rows(pred.size(), gt.size(), "per_part_v2vp");
  PartValues out;
  for (const PartMask& m : masks) {
    if (m.vertices.empty()) throw Error(ErrorCode::EmptyMask, "part '" + m.name + "' has no vertices");
    double s = 0.0;
    for (int v : m.vertices) s += (pred[v] - gt[v]) * (pred[v] - gt[v]);
    out.emplace_back(m.name, s / static_cast<double>(m.vertices.size()));
  }
  return out;
}

MetricReport evaluate_sample(const SamplePrediction& pred, const SampleTruth& gt, const BodyModel& model,
                             const NeighborTable& neighbors) {
  MetricReport r;
  r.mpjpe_mm = mpjpe(pred.joints, gt.joints);
  r.pve_mm = pve(pred.vertices, gt.vertices);
  r.shape_err_cm = shape_errors(pred.beta, gt.beta, model);
  r.v2vp = v2vp(pred.pressure, gt.pressure);
  r.v2vp_1ea = v2vp_smoothed(pred.pressure, gt.pressure, neighbors.ring1);
  r.v2vp_2ea = v2vp_smoothed(pred.pressure, gt.pressure, neighbors.ring2);
  r.per_part_v2vp = per_part_v2vp(pred.pressure, gt.pressure, model.part_masks);
  r.num_samples = 1;
  return r;
}

MetricReport merge_reports(const std::vector<MetricReport>& reports) {
  MetricReport out;
  for (const MetricReport& r : reports) out.num_samples += r.num_samples;
  if (out.num_samples == 0) return out;
  if (!reports.empty()) {
    out.per_part_v2vp = reports.front().per_part_v2vp;
    for (auto& [name, value] : out.per_part_v2vp) value = 0.0;
  }
  for (const MetricReport& r : reports) {
    const double w = static_cast<double>(r.num_samples) / static_cast<double>(out.num_samples);
    out.mpjpe_mm += w * r.mpjpe_mm;
    out.pve_mm += w * r.pve_mm;
    out.shape_err_cm.height_cm += w * r.shape_err_cm.height_cm;
    out.shape_err_cm.chest_cm += w * r.shape_err_cm.chest_cm;
    out.shape_err_cm.waist_cm += w * r.shape_err_cm.waist_cm;
    out.shape_err_cm.hips_cm += w * r.shape_err_cm.hips_cm;
    out.v2vp += w * r.v2vp;
    out.v2vp_1ea += w * r.v2vp_1ea;
    out.v2vp_2ea += w * r.v2vp_2ea;
    for (std::size_t i = 0; i < out.per_part_v2vp.size() && i < r.per_part_v2vp.size(); ++i) {
      out.per_part_v2vp[i].second += w * r.per_part_v2vp[i].second;
    }
  }
  return out;
}

}  // namespace pressmap
