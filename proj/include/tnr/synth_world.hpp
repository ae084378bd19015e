// Synthetic teach/repeat traversals with ground-truth poses and a small
// procedural stereo renderer. Stands in for recorded outdoor datasets: the
// world is a textured ground plane with striped landmark posts, and the
// appearance condition (illumination, season, headlights, sun flare, sensor
// noise) is a controlled covariate.

#ifndef TNR_SYNTH_WORLD_HPP_
#define TNR_SYNTH_WORLD_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tnr/geometry.hpp"
#include "tnr/image.hpp"
#include "tnr/pose_graph.hpp"

namespace tnr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

inline Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}
inline Rgb scale(const Rgb& a, double s) { return {a.r * s, a.g * s, a.b * s}; }

struct WorldConfig {
  std::vector<Vec2> waypoints;
  int landmark_count = 260;
  std::uint64_t texture_seed = 7;
  double landmark_min_offset = 1.5;  // meters from the path
  double landmark_max_offset = 9.0;
  // Terrain palette, linear [0,1] RGB.
  Rgb grass{0.20, 0.42, 0.14};
  Rgb soil{0.45, 0.34, 0.22};
  Rgb snow{0.90, 0.92, 0.96};
  Rgb sky{0.52, 0.68, 0.92};
  bool ground_texture = true;

  void validate() const {
    if (waypoints.size() < 2)
      throw std::invalid_argument("WorldConfig: need >= 2 waypoints");
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      len += std::hypot(waypoints[i].x - waypoints[i - 1].x,
                        waypoints[i].y - waypoints[i - 1].y);
    if (!(len > 0.0))
      throw std::invalid_argument("WorldConfig: path length must be > 0");
    if (landmark_count < 0)
      throw std::invalid_argument("WorldConfig: landmark_count must be >= 0");
  }

  /// Paved-loop character: a smooth closed ellipse, ~41 m around.
  static WorldConfig smooth_loop() {
    WorldConfig w;
    const int n = 128;
    for (int i = 0; i <= n; ++i) {
      const double a = 2.0 * kPi * i / n;
      w.waypoints.push_back({8.0 * std::sin(a), 5.0 - 5.0 * std::cos(a)});
    }
    return w;
  }

  /// Sharper-turn character: a rounded rectangle with tight corners.
  static WorldConfig sharp_turns() {
    WorldConfig w;
    w.texture_seed = 11;
    const double hx = 7.0, hy = 4.0, r = 1.2;
    const Vec2 centers[4] = {{hx - r, r - hy},
                             {hx - r, hy - r},
                             {r - hx, hy - r},
                             {r - hx, r - hy}};
    const double start[4] = {-kPi / 2, 0.0, kPi / 2, kPi};
    w.waypoints.push_back({0.0, -hy});
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k <= 8; ++k) {
        const double a = start[c] + (kPi / 2) * k / 8.0;
        w.waypoints.push_back(
            {centers[c].x + r * std::cos(a), centers[c].y + r * std::sin(a)});
      }
    w.waypoints.push_back({0.0, -hy});
    return w;
  }
};

struct ConditionParams {
  double illumination = 1.0;  // 0 = night
  double season = 1.0;        // 0 = full snow, 1 = green
  bool headlights = false;
  bool sun_flare = false;
  double noise_sigma = 0.01;  // std of additive pixel noise, [0,1] units

  void validate() const {
    if (illumination < 0.0 || illumination > 1.0 || season < 0.0 ||
        season > 1.0 || noise_sigma < 0.0)
      throw std::invalid_argument("ConditionParams out of range");
  }
};

struct TraversalConfig {
  double lateral_sigma = 0.0;    // meters
  double heading_sigma = 0.0;    // radians
  double keyframe_spacing_mean = 0.22;
  double keyframe_spacing_jitter = 0.0;
  double correlation_length = 3.0;  // meters of arclength
  ConditionParams condition;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(keyframe_spacing_mean > 0.0))
      throw std::invalid_argument("TraversalConfig: spacing_mean must be > 0");
    if (keyframe_spacing_jitter < 0.0 || keyframe_spacing_jitter >= 1.0)
      throw std::invalid_argument("TraversalConfig: jitter must be in [0,1)");
    if (lateral_sigma < 0.0 || heading_sigma < 0.0 ||
        !(correlation_length > 0.0))
      throw std::invalid_argument("TraversalConfig: bad offset parameters");
    condition.validate();
  }
};

struct CameraModel {
  double focal = 110.85;  // pixels; ~60 deg horizontal field of view at 128 px
  double cx = 64.0;
  double cy = 28.8;       // horizon sits at 30% of the image height
  double baseline = 0.24;
  double mount_height = 1.0;
  int width = 128;
  int height = 96;

  void validate() const {
    if (!(baseline > 0.0) || !(focal > 0.0) || width <= 0 || height <= 0 ||
        !(mount_height > 0.0))
      throw std::invalid_argument("CameraModel: invalid parameters");
  }

  /// Same field of view and horizon placement at another resolution.
  static CameraModel with_size(int w, int h) {
    CameraModel c;
    const double s = w / 128.0;
    c.focal = 110.85 * s;
    c.cx = w / 2.0;
    c.cy = 0.3 * h;
    c.width = w;
    c.height = h;
    return c;
  }
};

/// Keyframe poses along a traversal with their arclength along the taught
/// path.
struct Trajectory {
  std::vector<Pose2> poses;
  std::vector<double> arclength;
};

// ---------------------------------------------------------------------------

class Polyline {
 public:
  explicit Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    cum_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i)
      cum_.push_back(cum_.back() + std::hypot(pts_[i].x - pts_[i - 1].x,
                                              pts_[i].y - pts_[i - 1].y));
  }

  double length() const { return cum_.back(); }
  const std::vector<Vec2>& points() const { return pts_; }
  const std::vector<double>& cumulative() const { return cum_; }

  /// Segment containing arclength s; vertices belong to the following
  /// segment. Zero-length segments are skipped.
  std::size_t segment(double s) const {
    const std::size_t nseg = pts_.size() - 1;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = it == cum_.begin() ? 0 : std::size_t(it - cum_.begin()) - 1;
    i = std::min(i, nseg - 1);
    while (i + 1 < nseg && cum_[i + 1] - cum_[i] <= 0.0) ++i;
    while (i > 0 && cum_[i + 1] - cum_[i] <= 0.0) --i;
    return i;
  }

  Vec2 point_at(double s) const {
    const std::size_t i = segment(s);
    const double len = cum_[i + 1] - cum_[i];
    const double t = len > 0.0 ? std::clamp((s - cum_[i]) / len, 0.0, 1.0) : 0.0;
    return {pts_[i].x + t * (pts_[i + 1].x - pts_[i].x),
            pts_[i].y + t * (pts_[i + 1].y - pts_[i].y)};
  }

  double heading_at(double s) const {
    const std::size_t i = segment(s);
    return std::atan2(pts_[i + 1].y - pts_[i].y, pts_[i + 1].x - pts_[i].x);
  }

  /// Closest point on segments [first, last); returns (arclength, distance).
  std::pair<double, double> project(const Vec2& p, std::size_t first = 0,
                                    std::size_t last = SIZE_MAX) const {
    last = std::min(last, pts_.size() - 1);
    double best_s = 0.0, best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < last; ++i) {
      const double dx = pts_[i + 1].x - pts_[i].x;
      const double dy = pts_[i + 1].y - pts_[i].y;
      const double len2 = dx * dx + dy * dy;
      double t = 0.0;
      if (len2 > 0.0)
        t = std::clamp(((p.x - pts_[i].x) * dx + (p.y - pts_[i].y) * dy) / len2,
                       0.0, 1.0);
      const double d =
          std::hypot(p.x - (pts_[i].x + t * dx), p.y - (pts_[i].y + t * dy));
      if (d < best_d) {
        best_d = d;
        best_s = cum_[i] + t * std::sqrt(len2);
      }
    }
    return {best_s, best_d};
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double lattice01(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(std::uint64_t(ix) * 0x1F1F1F1Full +
                                                 std::uint64_t(iy)));
  return double(h >> 11) * (1.0 / 9007199254740992.0);
}

/// Smooth value noise in [0,1] with unit lattice spacing.
inline double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice01(ix, iy, seed), b = lattice01(ix + 1, iy, seed);
  const double c = lattice01(ix, iy + 1, seed), d = lattice01(ix + 1, iy + 1, seed);
  return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline std::uint64_t hash_pose(const Pose2& p, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  for (double v : {p.x, p.y, p.theta}) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

}  // namespace detail

struct Landmark {
  Vec2 position;
  double width = 0.3;
  double height = 1.5;
  Rgb color;
  double stripe_period = 0.4;
};

/// Precomputed world geometry: the path and the landmark field.
class Scene {
 public:
  explicit Scene(const WorldConfig& world) : world_(world), path_(world.waypoints) {
    world.validate();
    std::mt19937_64 rng(world.texture_seed * 7919 + 17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int guard = 0;
    while (static_cast<int>(landmarks_.size()) < world.landmark_count &&
           guard++ < world.landmark_count * 50) {
      const double s = u01(rng) * path_.length();
      const double side = u01(rng) < 0.5 ? -1.0 : 1.0;
      const double off =
          world.landmark_min_offset +
          u01(rng) * (world.landmark_max_offset - world.landmark_min_offset);
      const Vec2 p = path_.point_at(s);
      const double h = path_.heading_at(s);
      const Vec2 pos{p.x - side * off * std::sin(h), p.y + side * off * std::cos(h)};
      if (path_.project(pos).second < world.landmark_min_offset) continue;
      Landmark lm;
      lm.position = pos;
      lm.width = 0.15 + 0.55 * u01(rng);
      lm.height = 0.8 + 2.2 * u01(rng);
      const double hue = u01(rng);
      lm.color = hue_to_rgb(hue, 0.35 + 0.45 * u01(rng));
      lm.stripe_period = 0.2 + 0.4 * u01(rng);
      landmarks_.push_back(lm);
    }
  }

  const WorldConfig& world() const { return world_; }
  const Polyline& path() const { return path_; }
  const std::vector<Landmark>& landmarks() const { return landmarks_; }

 private:
  static Rgb hue_to_rgb(double h, double v) {
    auto ch = [&](double off) {
      double t = std::fmod(h + off, 1.0) * 6.0;
      double c = std::clamp(std::abs(t - 3.0) - 1.0, 0.0, 1.0);
      return 0.15 + v * c;
    };
    return {ch(0.0), ch(2.0 / 3.0), ch(1.0 / 3.0)};
  }

  WorldConfig world_;
  Polyline path_;
  std::vector<Landmark> landmarks_;
};

// ---------------------------------------------------------------------------
// Traversal generation

inline Trajectory generate_teach(const WorldConfig& world,
                                 const TraversalConfig& traversal) {
  world.validate();
  traversal.validate();
  const Polyline path(world.waypoints);
  std::mt19937_64 rng(traversal.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Trajectory out;
  const double end = path.length() + 1e-9;
  for (double s = 0.0; s <= end;) {
    const Vec2 p = path.point_at(s);
    out.poses.emplace_back(p.x, p.y, path.heading_at(s));
    out.arclength.push_back(s);
    s += traversal.keyframe_spacing_mean *
         (1.0 + traversal.keyframe_spacing_jitter * jitter(rng));
  }
  return out;
}

/// Follows the teach keyframes with smooth, independently correlated lateral
/// and heading offsets (stationary std = the configured sigmas, clipped at
/// 3 sigma) and its own jittered keyframe spacing.
inline Trajectory generate_repeat(const Trajectory& teach,
                                  const TraversalConfig& traversal) {
  traversal.validate();
  if (teach.poses.size() < 2 || teach.arclength.size() != teach.poses.size())
    throw std::invalid_argument("generate_repeat: teach needs >= 2 keyframes");
  std::mt19937_64 rng(traversal.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto& ts = teach.arclength;
  const double end = ts.back() + 1e-9;
  const double ls = traversal.lateral_sigma, hs = traversal.heading_sigma;

  double lat = ls * gauss(rng);
  double head = hs * gauss(rng);
  double prev_s = 0.0;
  Trajectory out;
  std::size_t seg = 0;
  for (double s = 0.0; s <= end;) {
    const double rho = std::exp(-(s - prev_s) / traversal.correlation_length);
    const double innov = std::sqrt(1.0 - rho * rho);
    if (!out.poses.empty()) {
      lat = rho * lat + innov * ls * gauss(rng);
      head = rho * head + innov * hs * gauss(rng);
    }
    lat = std::clamp(lat, -3.0 * ls, 3.0 * ls);
    head = std::clamp(head, -3.0 * hs, 3.0 * hs);

    while (seg + 2 < ts.size() && ts[seg + 1] <= s) ++seg;
    Pose2 base;
    const double span = ts[seg + 1] - ts[seg];
    const double u = span > 0.0 ? std::clamp((s - ts[seg]) / span, 0.0, 1.0) : 0.0;
    if (u == 0.0) {
      base = teach.poses[seg];
    } else if (u == 1.0) {
      base = teach.poses[seg + 1];
    } else {
      const Pose2& a = teach.poses[seg];
      const Pose2& b = teach.poses[seg + 1];
      base = {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y),
              a.theta + u * wrap_angle(b.theta - a.theta)};
    }
    out.poses.emplace_back(base.x - lat * std::sin(base.theta),
                           base.y + lat * std::cos(base.theta),
                           base.theta + head);
    out.arclength.push_back(s);
    prev_s = s;
    s += traversal.keyframe_spacing_mean *
         (1.0 + traversal.keyframe_spacing_jitter * jitter(rng));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

/// Pinhole projection of a world point at height `z` (meters above ground)
/// into a camera at `camera_pose`. Returns (u, v, depth); depth <= 0 means
/// behind the camera.
inline std::array<double, 3> project_point(const CameraModel& cam,
                                           const Pose2& camera_pose,
                                           const Vec2& p, double z) {
  const double dx = p.x - camera_pose.x, dy = p.y - camera_pose.y;
  const double c = std::cos(camera_pose.theta), s = std::sin(camera_pose.theta);
  const double forward = dx * c + dy * s;
  const double right = dx * s - dy * c;
  const double down = cam.mount_height - z;
  if (forward <= 0.0) return {0.0, 0.0, forward};
  return {cam.cx + cam.focal * right / forward,
          cam.cy + cam.focal * down / forward, forward};
}

/// Pose of the right camera of the stereo pair mounted at `pose`.
inline Pose2 right_camera_pose(const Pose2& pose, const CameraModel& cam) {
  return compose(pose, Pose2(0.0, -cam.baseline, 0.0));
}

namespace detail {

inline Rgb ground_albedo(const WorldConfig& w, double X, double Y,
                         double footprint, double season) {
  const std::uint64_t seed = w.texture_seed;
  double tex = 0.0;
  if (w.ground_texture) {
    constexpr double kWave[5] = {5.0, 1.6, 0.55, 0.2, 0.08};
    constexpr double kAmp[5] = {0.30, 0.30, 0.28, 0.24, 0.18};
    for (int o = 0; o < 5; ++o) {
      const double fade = smoothstep(1.5 * footprint, 3.0 * footprint, kWave[o]);
      if (fade <= 0.0) continue;
      tex += fade * kAmp[o] *
             (2.0 * value_noise(X / kWave[o], Y / kWave[o], seed + 101 * o) - 1.0);
    }
  }
  const double patch = w.ground_texture ? value_noise(X / 2.5, Y / 2.5, seed + 7) : 0.5;
  const Rgb green = mix(w.grass, w.soil, smoothstep(0.5, 0.7, patch));
  const double cover_noise =
      w.ground_texture ? value_noise(X / 1.7, Y / 1.7, seed + 13) : 0.5;
  const double cover = std::clamp((cover_noise - season) * 4.0 + 0.5, 0.0, 1.0);
  const Rgb g = scale(green, 1.0 + 1.3 * tex);
  const Rgb s = scale(w.snow, 1.0 + 0.35 * tex);
  return mix(g, s, cover);
}

inline void render_view(const Scene& scene, const Pose2& cam_pose,
                        const CameraModel& cam, const ConditionParams& cond,
                        std::uint64_t noise_seed, Image& out) {
  const WorldConfig& w = scene.world();
  const int W = cam.width, H = cam.height;
  std::vector<Rgb> buf(std::size_t(W) * H);
  const double ambient = 0.06 + 0.94 * cond.illumination;
  const double c = std::cos(cam_pose.theta), s = std::sin(cam_pose.theta);
  const Rgb haze = mix(Rgb{0.02, 0.03, 0.06}, w.sky, cond.illumination);

  auto headlight = [&](double u, double v) {
    if (!cond.headlights) return 0.0;
    const double du = (u - 0.5 * W) / (0.45 * W);
    const double dv = (v - 0.85 * H) / (0.5 * H);
    return 1.1 * std::exp(-(du * du + dv * dv));
  };

  for (int v = 0; v < H; ++v) {
    const double b = (v + 0.5 - cam.cy) / cam.focal;
    for (int u = 0; u < W; ++u) {
      const double a = (u + 0.5 - cam.cx) / cam.focal;
      Rgb col;
      if (b <= 1e-6) {
        const double up = std::clamp(-b * 2.0, 0.0, 1.0);
        col = scale(mix(mix(w.sky, Rgb{0.9, 0.9, 0.92}, 0.35), w.sky, up), ambient);
      } else {
        const double t = cam.mount_height / b;  // forward distance
        const double X = cam_pose.x + t * c + a * t * s;
        const double Y = cam_pose.y + t * s - a * t * c;
        const double footprint = std::max(t / cam.focal, t * t / (cam.focal * cam.mount_height));
        const Rgb alb = ground_albedo(w, X, Y, footprint, cond.season);
        const double light = ambient + headlight(u + 0.5, v + 0.5) * std::exp(-t / 12.0);
        col = scale(alb, light);
        const double fog = 1.0 - std::exp(-t / 45.0);
        col = mix(col, scale(haze, 0.9), fog);
      }
      buf[std::size_t(v) * W + u] = col;
    }
  }

  struct Visible {
    const Landmark* lm;
    double u, depth;
  };
  std::vector<Visible> vis;
  for (const auto& lm : scene.landmarks()) {
    const auto pr = project_point(cam, cam_pose, lm.position, 0.0);
    if (pr[2] < 0.4 || pr[2] > 60.0) continue;
    const double half = cam.focal * lm.width * 0.5 / pr[2];
    if (pr[0] + half < 0.0 || pr[0] - half > W) continue;
    vis.push_back({&lm, pr[0], pr[2]});
  }
  std::sort(vis.begin(), vis.end(),
            [](const Visible& l, const Visible& r) { return l.depth > r.depth; });

  const double snow_cap = std::clamp(1.0 - 2.0 * cond.season, 0.0, 1.0);
  for (const auto& vl : vis) {
    const Landmark& lm = *vl.lm;
    const double z = vl.depth;
    const double half = cam.focal * lm.width * 0.5 / z;
    const double u0 = vl.u - half, u1 = vl.u + half;
    const double v_bot = cam.cy + cam.focal * cam.mount_height / z;
    const double v_top = cam.cy + cam.focal * (cam.mount_height - lm.height) / z;
    const int iu0 = std::max(0, int(std::floor(u0)));
    const int iu1 = std::min(W - 1, int(std::floor(u1)));
    const int iv0 = std::max(0, int(std::floor(v_top)));
    const int iv1 = std::min(H - 1, int(std::floor(v_bot)));
    const double fog = 1.0 - std::exp(-z / 45.0);
    for (int v = iv0; v <= iv1; ++v) {
      const double cov_v = std::min(v + 1.0, v_bot) - std::max(double(v), v_top);
      if (cov_v <= 0.0) continue;
      const double height = cam.mount_height - (v + 0.5 - cam.cy) * z / cam.focal;
      const bool dark = int(std::floor(height / lm.stripe_period)) % 2 == 1;
      Rgb alb = scale(lm.color, dark ? 0.5 : 1.0);
      if (height > lm.height * 0.85) alb = mix(alb, w.snow, snow_cap);
      for (int u = iu0; u <= iu1; ++u) {
        const double cov_u = std::min(u + 1.0, u1) - std::max(double(u), u0);
        if (cov_u <= 0.0) continue;
        const double local = (u + 0.5 - vl.u) / (2.0 * half);
        Rgb a = local > 0.15 ? scale(alb, 0.75) : alb;
        const double light = ambient + headlight(u + 0.5, v + 0.5) * std::exp(-z / 12.0);
        Rgb col = mix(scale(a, light), scale(haze, 0.9), fog);
        Rgb& dst = buf[std::size_t(v) * W + u];
        dst = mix(dst, col, std::clamp(cov_u, 0.0, 1.0) * std::clamp(cov_v, 0.0, 1.0));
      }
    }
  }

  if (cond.sun_flare) {
    const double fx = 0.8 * W, fy = 0.12 * H, r = 0.16 * W;
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) {
        const double d2 = ((u + 0.5 - fx) * (u + 0.5 - fx) + (v + 0.5 - fy) * (v + 0.5 - fy)) / (r * r);
        const double k = 1.6 * std::exp(-d2);
        Rgb& dst = buf[std::size_t(v) * W + u];
        dst = {dst.r + k, dst.g + 0.95 * k, dst.b + 0.75 * k};
      }
  }

  out = Image(W, H);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < W * H; ++i) {
    const Rgb& p = buf[i];
    const double ch[3] = {p.r, p.g, p.b};
    for (int k = 0; k < 3; ++k) {
      double val = ch[k];
      if (cond.noise_sigma > 0.0) val += cond.noise_sigma * gauss(rng);
      out.rgb[std::size_t(i) * 3 + k] =
          static_cast<std::uint8_t>(std::lround(std::clamp(val, 0.0, 1.0) * 255.0));
    }
  }
}

}  // namespace detail

inline StereoImage render_stereo(const Pose2& pose, const Scene& scene,
                                 const CameraModel& camera,
                                 const ConditionParams& condition) {
  camera.validate();
  condition.validate();
  StereoImage out;
  const std::uint64_t seed = detail::hash_pose(pose, scene.world().texture_seed);
  detail::render_view(scene, pose, camera, condition, seed, out.left);
  detail::render_view(scene, right_camera_pose(pose, camera), camera, condition,
                      detail::splitmix64(seed), out.right);
  return out;
}

inline StereoImage render_stereo(const Pose2& pose, const WorldConfig& world,
                                 const CameraModel& camera,
                                 const ConditionParams& condition) {
  return render_stereo(pose, Scene(world), camera, condition);
}

// ---------------------------------------------------------------------------
// Pose graph assembly

struct GraphBuildOptions {
  double label_noise_sigma = 0.0;
  double anchor_gate = 2.0;  // meters
  std::uint64_t noise_seed = 0;
  /// Condition tag per run (index 0 = teach); missing entries stay empty.
  std::vector<std::string> conditions;
  /// Image locator for a vertex; left empty when unset.
  std::function<std::pair<std::string, std::string>(const VertexId&)> image_ref;
};

/// Temporal edges are the exact consecutive relative poses, spatial edges
/// anchor each repeat keyframe to the teach keyframe nearest in arclength
/// along the teach keyframe polyline. Both carry optional zero-mean noise.
inline PoseGraph build_graph(const std::vector<Pose2>& teach,
                             const std::vector<std::vector<Pose2>>& repeats,
                             const GraphBuildOptions& opts = {}) {
  if (teach.empty()) throw GraphError("build_graph: empty teach run");
  std::mt19937_64 rng(opts.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double ns = opts.label_noise_sigma;
  auto noisy = [&](const Pose2& p) {
    if (ns <= 0.0) return p;
    const double ex = ns * gauss(rng), ey = ns * gauss(rng), et = ns * gauss(rng);
    return Pose2(p.x + ex, p.y + ey, p.theta + et);
  };

  auto add = [&](PoseGraph& g, int run, const std::vector<Pose2>& poses) {
    if (poses.empty())
      throw GraphError("build_graph: run " + std::to_string(run) + " is empty");
    std::vector<Keyframe> kfs;
    std::vector<Pose2> xis;
    double t = 0.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      Keyframe kf;
      kf.id = {run, int(i)};
      if (i > 0) {
        xis.push_back(noisy(relative(poses[i], poses[i - 1])));
        t += std::hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y);
      }
      kf.timestamp = 1000.0 * run + t;  // 1 m/s
      if (run < int(opts.conditions.size())) kf.condition = opts.conditions[run];
      if (opts.image_ref) std::tie(kf.image_left, kf.image_right) = opts.image_ref(kf.id);
      kfs.push_back(std::move(kf));
    }
    g.add_run(run, std::move(kfs), std::move(xis));
  };

  PoseGraph g;
  add(g, 0, teach);
  std::vector<Vec2> teach_pts;
  for (const auto& p : teach) teach_pts.push_back({p.x, p.y});
  if (teach_pts.size() == 1) teach_pts.push_back(teach_pts[0]);
  const Polyline teach_line(teach_pts);
  const auto& cum = teach_line.cumulative();

  for (std::size_t r = 0; r < repeats.size(); ++r) {
    const int run = int(r) + 1;
    add(g, run, repeats[r]);
    std::optional<double> prev_s;
    for (std::size_t k = 0; k < repeats[r].size(); ++k) {
      const Pose2& p = repeats[r][k];
      std::size_t first = 0, last = SIZE_MAX;
      if (prev_s) {
        const auto lo = std::lower_bound(cum.begin(), cum.end(), *prev_s - 2.0);
        const auto hi = std::upper_bound(cum.begin(), cum.end(), *prev_s + 5.0);
        first = lo == cum.begin() ? 0 : std::size_t(lo - cum.begin()) - 1;
        last = std::size_t(hi - cum.begin());
      }
      const double s = teach_line.project({p.x, p.y}, first, last).first;
      prev_s = s;
      const auto it = std::lower_bound(cum.begin(), cum.end(), s);
      std::size_t best = std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
      if (best > 0 && s - cum[best - 1] <= cum[best] - s) --best;
      best = std::min(best, teach.size() - 1);
      const Pose2& tp = teach[best];
      const double d = std::hypot(p.x - tp.x, p.y - tp.y);
      if (d > opts.anchor_gate)
        throw GraphError("build_graph: repeat keyframe " +
                         to_string(VertexId{run, int(k)}) + " is " +
                         std::to_string(d) + " m from its nearest teach keyframe (gate " +
                         std::to_string(opts.anchor_gate) + " m)");
      g.add_spatial_edge({run, int(k)}, {0, int(best)}, noisy(relative(p, tp)));
    }
  }
  return g;
}

}  // namespace tnr

#endif  // TNR_SYNTH_WORLD_HPP_
