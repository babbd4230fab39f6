#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include <cmath>
#include <set>
#include <vector>

#include "pressmap/body_model.hpp"

namespace pressmap::oracle {

inline double mean_distance_mm(const MatX3& a, const MatX3& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += (a(i, k) - b(i, k)) * (a(i, k) - b(i, k));
    s += std::sqrt(d2);
  }
  return 1000.0 * s / static_cast<double>(a.rows());
}

inline double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// Vertices within `depth` edges of v (excluding v), found by scanning faces.
inline std::set<int> neighborhood_by_face_scan(const FaceArray& faces, int v, int depth) {
  std::set<int> frontier{v}, seen{v};
  for (int d = 0; d < depth; ++d) {
    std::set<int> next;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
      for (int a = 0; a < 3; ++a) {
        if (!frontier.count(faces(f, a))) continue;
        for (int b = 0; b < 3; ++b) {
          if (!seen.count(faces(f, b))) next.insert(faces(f, b));
        }
      }
    }
    seen.insert(next.begin(), next.end());
    frontier = next;
  }
  seen.erase(v);
  return seen;
}

inline Eigen::VectorXd smooth(const Eigen::VectorXd& p, const FaceArray& faces, int depth) {
  Eigen::VectorXd out(p.size());
  for (Eigen::Index v = 0; v < p.size(); ++v) {
    const std::set<int> nb = neighborhood_by_face_scan(faces, static_cast<int>(v), depth);
    double s = p[v];
    for (int w : nb) s += p[w];
    out[v] = s / static_cast<double>(nb.size() + 1);
  }
  return out;
}

inline double masked_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<int>& mask) {
  double s = 0.0;
  for (int v : mask) s += (a[v] - b[v]) * (a[v] - b[v]);
  return s / static_cast<double>(mask.size());
}

}  // namespace pressmap::oracle
