#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pressmap/body_model.hpp"
#include "pressmap/fim.hpp"
#include "pressmap/sample.hpp"

namespace pressmap::cli {

// Runs one command line and returns the process exit code.
int run(int argc, const char* const* argv);

// Four 0/1 characters in xyz, image, latent, global order, e.g. "1011".
FimToggles parse_fim_toggles(std::string_view bits);

// Comma-separated names such as "left_lateral,right_lateral" or "cover1,cover2".
std::vector<PoseCategory> parse_poses(std::string_view list);
std::vector<Cover> parse_covers(std::string_view list);

// PRESSMAP_THREADS if set, else the hardware concurrency.
int thread_count();

// Zero maps to light gray. Positive values ramp linearly through blue, cyan,
// green, yellow and red, which is reached at vmax and above.
std::array<std::uint8_t, 3> pressure_color(double kpa, double vmax);

// ASCII PLY with per-vertex colors and a pressure_kpa property.
void write_colored_ply(const std::filesystem::path& path, const MatX3& vertices, const FaceArray& faces,
                       const Eigen::VectorXd& values, double vmax);

}  // namespace pressmap::cli
