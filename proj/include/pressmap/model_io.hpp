#pragma once

#include <filesystem>

#include "pressmap/body_model.hpp"

namespace pressmap {

// A model directory holds header.json (kinematic tree, rings, part masks,
// gender, axis conventions) plus one PMT1 file per numeric array.
void save_model(const BodyModel& model, const std::filesystem::path& dir);
BodyModel load_model(const std::filesystem::path& dir);

}  // namespace pressmap
