#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"

namespace pressmap {

struct ShapeErrors {
  double height_cm = 0.0;
  double chest_cm = 0.0;
  double waist_cm = 0.0;
  double hips_cm = 0.0;
};

using PartValues = std::vector<std::pair<std::string, double>>;

struct MetricReport {
  double mpjpe_mm = 0.0;
  double pve_mm = 0.0;
  ShapeErrors shape_err_cm;
  double v2vp = 0.0;
  double v2vp_1ea = 0.0;
  double v2vp_2ea = 0.0;
  PartValues per_part_v2vp;
  std::size_t num_samples = 0;
};

// Inputs in meters; results in millimeters.
double mpjpe(const MatX3& pred_joints, const MatX3& gt_joints);
double pve(const MatX3& pred_vertices, const MatX3& gt_vertices);

ShapeErrors shape_errors(const Eigen::VectorXd& pred_beta, const Eigen::VectorXd& gt_beta, const BodyModel& model);

// Mean squared per-vertex error in kPa^2.
double v2vp(const VertexPressureMap& pred, const VertexPressureMap& gt);

// Mean over each vertex's closed neighborhood.
VertexPressureMap smooth_kring(const VertexPressureMap& vpm, const std::vector<std::vector<int>>& neighbors);
double v2vp_smoothed(const VertexPressureMap& pred, const VertexPressureMap& gt,
                     const std::vector<std::vector<int>>& neighbors);

// Throws EmptyMask.
PartValues per_part_v2vp(const VertexPressureMap& pred, const VertexPressureMap& gt,
                         const std::vector<PartMask>& masks);

struct SamplePrediction {
  Eigen::VectorXd beta;
  MatX3 joints;
  MatX3 vertices;
  VertexPressureMap pressure;
};

struct SampleTruth {
  Eigen::VectorXd beta;
  MatX3 joints;
  MatX3 vertices;
  VertexPressureMap pressure;
};

MetricReport evaluate_sample(const SamplePrediction& pred, const SampleTruth& gt, const BodyModel& model,
                             const NeighborTable& neighbors);

// Sample-count-weighted mean of reports.
MetricReport merge_reports(const std::vector<MetricReport>& reports);

}  // namespace pressmap
