#pragma once

#include <cstdint>
#include <vector>

#include "pressmap/gradcheck.hpp"

namespace pressmap {

inline constexpr double kOpTolerance = 1e-6;
inline constexpr double kCompositeTolerance = 1e-5;

// Finite-difference checks of every tape op, every loss, and the end-to-end
// supervised and weakly supervised training graphs on small random networks.
std::vector<ad::GradcheckResult> run_gradcheck_suite(std::uint64_t seed = 0);

}  // namespace pressmap
