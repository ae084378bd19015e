// SE(2) transform algebra shared by the pose graph, the loss and the
// evaluation harness.

#ifndef TNR_GEOMETRY_HPP_
#define TNR_GEOMETRY_HPP_

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace tnr {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into the half-open interval (-pi, pi].
inline double wrap_angle(double t) {
  if (!std::isfinite(t)) return t;
  if (t > -kPi && t <= kPi) return t;
  double r = std::fmod(t + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  // r in [0, 2pi); r == 0 corresponds to -pi which maps to +pi.
  double out = r - kPi;
  if (out <= -kPi) out = kPi;
  return out;
}

inline double rad_to_deg(double r) { return r * 180.0 / kPi; }
inline double deg_to_rad(double d) { return d * kPi / 180.0; }

/// Planar rigid transform: longitudinal x, lateral y (meters), heading theta
/// (radians). Read as "pose of some frame a expressed in frame b".
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  static Pose2 identity() { return {}; }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
  }

  friend bool operator==(const Pose2&, const Pose2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Pose2& p) {
    return os << "(" << p.x << ", " << p.y << ", " << p.theta << ")";
  }
};

/// Diagonal of the loss/selection weighting matrix.
struct LossWeights {
  double w_x = 1.0;
  double w_y = 1.0;
  double w_theta = 10.0;

  LossWeights() = default;
  LossWeights(double wx, double wy, double wt) : w_x(wx), w_y(wy), w_theta(wt) {
    if (!(wx > 0.0 && wy > 0.0 && wt > 0.0))
      throw std::invalid_argument("LossWeights: all weights must be > 0");
  }
};

/// a ∘ b: applies b in the frame of a.
inline Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {a.x + b.x * c - b.y * s, a.y + b.x * s + b.y * c, a.theta + b.theta};
}

inline Pose2 inverse(const Pose2& a) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {-a.x * c - a.y * s, a.x * s - a.y * c, -a.theta};
}

/// Pose of `a` relative to `b` when both are given in a common frame.
inline Pose2 relative(const Pose2& a, const Pose2& b) {
  return compose(inverse(b), a);
}

inline double weighted_norm(const Pose2& xi, const LossWeights& w = {}) {
  return std::sqrt(w.w_x * xi.x * xi.x + w.w_y * xi.y * xi.y +
                   w.w_theta * xi.theta * xi.theta);
}

}  // namespace tnr

#endif  // TNR_GEOMETRY_HPP_
