#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "pressmap/body_model.hpp"

namespace pressmap {

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "pelvis",     "left_hip",       "right_hip",      "spine1",      "left_knee",   "right_knee",
    "spine2",     "left_ankle",     "right_ankle",    "spine3",      "left_foot",   "right_foot",
    "neck",       "left_collar",    "right_collar",   "head",        "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",    "left_wrist",     "right_wrist", "left_hand",   "right_hand"};

inline constexpr std::array<int, kNumJoints> kSmplParents = {
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

struct ToyModelConfig {
  int n_v = 690;
  std::uint64_t seed = 7;
  Gender gender = Gender::Neutral;
};

// Capsule-limb humanoid with the 24-joint SMPL tree: a torso+head tube and
// four limb tubes. Rest pose stands along +Y, faces +Z, left is +X.
// Throws ConfigInvalid when n_v < 200 or no ring layout reaches n_v exactly.
BodyModel generate_toy_model(const ToyModelConfig& config);

}  // namespace pressmap
