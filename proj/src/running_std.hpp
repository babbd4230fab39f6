#pragma once

#include <algorithm>
#include <cmath>

#include "pressmap/losses.hpp"

namespace pressmap::detail {

// Welford accumulator for a pooled population standard deviation.
struct RunningStd {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  template <typename Range>
  void add_all(const Range& values) {
    for (double x : values) {
      count += 1.0;
      const double d = x - mean;
      mean += d / count;
      m2 += d * (x - mean);
    }
  }

  double sigma() const { return std::max(kSigmaFloor, count > 0 ? std::sqrt(m2 / count) : 0.0); }
};

}  // namespace pressmap::detail
