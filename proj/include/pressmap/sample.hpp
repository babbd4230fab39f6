#pragma once

#include <string_view>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"

namespace pressmap {

enum class PoseCategory { Supine, LeftLateral, RightLateral };
enum class Cover { Uncovered, Cover1, Cover2 };

std::string_view to_string(PoseCategory c);
std::string_view to_string(Cover c);
PoseCategory pose_category_from_string(std::string_view s);
Cover cover_from_string(std::string_view s);

inline bool is_lateral(PoseCategory c) { return c != PoseCategory::Supine; }

// One synthetic in-bed observation with its ground truth.
struct SceneSample {
  DepthImage depth;
  PressureImage pressure;
  Gender gender = Gender::Neutral;
  BodyParams gt_params;
  PosedMesh gt_mesh;
  VertexPressureMap gt_vpm;
  VertexContact gt_contact;
  PoseCategory pose_category = PoseCategory::Supine;
  Cover cover = Cover::Uncovered;
  double body_mass_kg = 0.0;
};

}  // namespace pressmap
