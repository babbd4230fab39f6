#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pressmap/autodiff.hpp"

namespace pressmap::ad {

// Builds an output from inputs placed on a fresh tape as variables.
using Graph = std::function<Var(Tape&, std::span<const Var>)>;

struct GradcheckResult {
  std::string name;
  double rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t num_checked = 0;
  bool passed = false;
};

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) of the
// gradient of <c, f(inputs)> for a seeded random cotangent c, using central
// differences with step h. At most `max_coords` input coordinates are probed
// (evenly strided) per input; 0 probes all.
GradcheckResult check_gradient(const std::string& name, const Graph& f, const std::vector<Tensor>& inputs,
                               double tolerance, std::uint64_t seed = 0, double h = 1e-6,
                               std::size_t max_coords = 0);

}  // namespace pressmap::ad
