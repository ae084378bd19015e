// Test-side reference implementations, written independently of the
// library code they check.

#ifndef TNR_TESTS_ORACLES_HPP_
#define TNR_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tnr/geometry.hpp"

namespace oracle {

inline Eigen::Matrix3d to_matrix(const tnr::Pose2& p) {
  Eigen::Matrix3d m;
  m << std::cos(p.theta), -std::sin(p.theta), p.x,
       std::sin(p.theta), std::cos(p.theta), p.y,
       0.0, 0.0, 1.0;
  return m;
}

inline tnr::Pose2 from_matrix(const Eigen::Matrix3d& m) {
  return tnr::Pose2(m(0, 2), m(1, 2), std::atan2(m(1, 0), m(0, 0)));
}

/// Pose of global pose `a` expressed in the frame of global pose `b`.
inline tnr::Pose2 relative_global(const tnr::Pose2& a, const tnr::Pose2& b) {
  return from_matrix(to_matrix(b).inverse() * to_matrix(a));
}

/// Plain-loop pyramid max pooling over a row-major c x h x w map; cells
/// span [floor(i*n/b), ceil((i+1)*n/b)).
inline std::vector<double> spp(const std::vector<double>& map, int c, int h, int w,
                               const std::vector<int>& bins) {
  std::vector<double> out;
  for (int b : bins)
    for (int ch = 0; ch < c; ++ch)
      for (int by = 0; by < b; ++by)
        for (int bx = 0; bx < b; ++bx) {
          const int y0 = by * h / b, y1 = ((by + 1) * h + b - 1) / b;
          const int x0 = bx * w / b, x1 = ((bx + 1) * w + b - 1) / b;
          double m = -std::numeric_limits<double>::infinity();
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) m = std::max(m, map[(std::size_t(ch) * h + y) * w + x]);
          out.push_back(m);
        }
  return out;
}

/// Output size of a conv or pool window along one axis.
inline int window_out(int n, int k, int s, int pad) { return (n + 2 * pad - k) / s + 1; }

/// Fixed point of e <- w_vo * (e + b) + w_loc * 0: the steady corrected
/// error when VO carries a constant bias b and localization is exact.
inline double fusion_fixed_point(double w_vo, double bias) { return w_vo * bias / (1.0 - w_vo); }

}  // namespace oracle

#endif  // TNR_TESTS_ORACLES_HPP_
