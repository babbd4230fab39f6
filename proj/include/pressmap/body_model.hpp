#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pressmap {

using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceArray = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr int kNumJoints = 24;
inline constexpr int kNumBetas = 10;
inline constexpr int kNumPoseParams = 69;  // 23 non-root joints x axis-angle
inline constexpr int kNumRotParams = 6;
// Flattened parameter vector layout: [beta | theta | root_trans | rot_x | rot_y].
inline constexpr int kParamBetaOffset = 0;
inline constexpr int kParamThetaOffset = kNumBetas;
inline constexpr int kParamTransOffset = kParamThetaOffset + kNumPoseParams;
inline constexpr int kParamRotXOffset = kParamTransOffset + 3;
inline constexpr int kParamRotYOffset = kParamRotXOffset + 3;
inline constexpr int kNumParams = kParamRotYOffset + 3;  // 88

enum class Gender { Female, Male, Neutral };

std::string_view to_string(Gender g);
Gender gender_from_string(std::string_view s);

// Body-part names used for per-part pressure evaluation, in report order.
inline constexpr std::array<std::string_view, 14> kPartNames = {
    "left_heel",     "right_heel",     "left_toes", "right_toes", "left_elbow",
    "right_elbow",   "left_shoulder",  "right_shoulder", "spine",  "head",
    "left_hip",      "right_hip",      "sacrum",    "ischium"};

inline constexpr std::array<std::string_view, 3> kRingNames = {"chest", "waist", "hips"};

struct PartMask {
  std::string name;
  std::vector<int> vertices;
};

// Articulated template. Vertical axis is +Y in the rest pose.
struct BodyModel {
  MatX3 template_vertices;
  std::shared_ptr<const FaceArray> faces;
  Eigen::MatrixXd shape_basis;      // (3 N_v) x N_beta, row 3v+k holds coordinate k of vertex v
  Eigen::MatrixXd joint_regressor;  // N_j x N_v
  Eigen::MatrixXd skin_weights;     // N_v x N_j
  std::vector<int> kinematic_parents;  // root has -1
  std::vector<PartMask> part_masks;
  std::map<std::string, std::vector<int>> measurement_rings;
  Eigen::MatrixXd pose_limits;  // N_theta x 2, (lower, upper) radians
  Gender gender = Gender::Neutral;

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_joints() const { return static_cast<int>(kinematic_parents.size()); }
  int num_betas() const { return static_cast<int>(shape_basis.cols()); }
  int num_pose_params() const { return 3 * (num_joints() - 1); }
};

// Throws ConfigInvalid naming the first violated invariant.
void validate(const BodyModel& model);

struct BodyParams {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kNumBetas);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumPoseParams);
  Eigen::Vector3d root_trans = Eigen::Vector3d::Zero();
  Eigen::Vector3d root_rot_x = Eigen::Vector3d::UnitX();
  Eigen::Vector3d root_rot_y = Eigen::Vector3d::UnitY();
  Gender gender = Gender::Neutral;

  Eigen::VectorXd flatten() const;
  static BodyParams unflatten(std::span<const double> psi, Gender gender = Gender::Neutral);
};

struct PosedMesh {
  MatX3 vertices;
  MatX3 joints;
  std::shared_ptr<const FaceArray> faces;

  int num_vertices() const { return static_cast<int>(vertices.rows()); }
};

struct NeighborTable {
  std::vector<std::vector<int>> ring1;
  std::vector<std::vector<int>> ring2;
};

struct Measurements {
  double height_m = 0.0;
  double chest_m = 0.0;
  double waist_m = 0.0;
  double hips_m = 0.0;
};

// Continuous 6D rotation: Gram-Schmidt on two 3-vectors, columns (b1, b2, b1 x b2).
Eigen::Matrix3d rot6d_to_matrix(const Eigen::Vector3d& x, const Eigen::Vector3d& y);

// Jacobian of the 9 matrix entries (row-major) w.r.t. (x, y).
Eigen::Matrix<double, 9, 6> rot6d_jacobian(const Eigen::Vector3d& x, const Eigen::Vector3d& y);

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& w);
Eigen::Matrix<double, 9, 3> axis_angle_jacobian(const Eigen::Vector3d& w);

// Shaped rest vertices: template + basis * beta.
MatX3 shaped_vertices(const BodyModel& model, const Eigen::VectorXd& beta);

// Linear blend skinning of `rest` with one affine transform per joint.
MatX3 blend_skinning(const Eigen::MatrixXd& skin_weights, const MatX3& rest,
                     std::span<const Eigen::Affine3d> transforms);

PosedMesh pose_mesh(const BodyModel& model, const BodyParams& params);

// Vector-Jacobian product of pose_mesh. Returns the gradient w.r.t. the
// flattened parameter vector (see kNumParams layout).
Eigen::VectorXd pose_mesh_vjp(const BodyModel& model, const BodyParams& params,
                              const MatX3& grad_vertices, const MatX3& grad_joints);

PosedMesh rest_pose_mesh(const BodyModel& model, const Eigen::VectorXd& beta);

Measurements anatomical_measurements(const PosedMesh& mesh, const BodyModel& model);

NeighborTable build_neighbor_table(const FaceArray& faces, int num_vertices);
inline NeighborTable build_neighbor_table(const BodyModel& model) {
  return build_neighbor_table(*model.faces, model.num_vertices());
}

}  // namespace pressmap
