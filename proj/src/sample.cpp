#include "pressmap/sample.hpp"

#include <string>

#include "pressmap/error.hpp"

namespace pressmap {

std::string_view to_string(PoseCategory c) {
  switch (c) {
    case PoseCategory::Supine: return "supine";
    case PoseCategory::LeftLateral: return "left_lateral";
    case PoseCategory::RightLateral: return "right_lateral";
  }
  return "supine";
}

std::string_view to_string(Cover c) {
  switch (c) {
    case Cover::Uncovered: return "uncovered";
    case Cover::Cover1: return "cover1";
    case Cover::Cover2: return "cover2";
  }
  return "uncovered";
}

PoseCategory pose_category_from_string(std::string_view s) {
  if (s == "supine") return PoseCategory::Supine;
  if (s == "left_lateral") return PoseCategory::LeftLateral;
  if (s == "right_lateral") return PoseCategory::RightLateral;
  throw Error(ErrorCode::ConfigInvalid, "unknown pose category '" + std::string(s) + "'");
}

Cover cover_from_string(std::string_view s) {
  if (s == "uncovered") return Cover::Uncovered;
  if (s == "cover1") return Cover::Cover1;
  if (s == "cover2") return Cover::Cover2;
  throw Error(ErrorCode::ConfigInvalid, "unknown cover '" + std::string(s) + "'");
}

}  // namespace pressmap
