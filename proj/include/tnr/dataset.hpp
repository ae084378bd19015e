// Synthetic dataset assembly on disk (rendered keyframes, pose graph file,
// image manifest) and the image store that resolves graph vertices back to
// stereo pairs.

#ifndef TNR_DATASET_HPP_
#define TNR_DATASET_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tnr/config.hpp"
#include "tnr/image.hpp"
#include "tnr/model.hpp"
#include "tnr/pose_graph.hpp"
#include "tnr/synth_world.hpp"

namespace tnr {

struct NamedCondition {
  std::string name;
  ConditionParams params;
};

/// Built-in appearance conditions, spanning a lighting axis (day/dusk/night)
/// and a season axis (green/snow).
inline std::optional<ConditionParams> condition_preset(const std::string& name) {
  static const std::map<std::string, ConditionParams> kPresets = {
      {"day-green", {1.0, 1.0, false, false, 0.01}},
      {"sun-green", {1.0, 1.0, false, true, 0.01}},
      {"dusk-green", {0.35, 1.0, false, false, 0.015}},
      {"night-green", {0.04, 1.0, true, false, 0.02}},
      {"day-snow", {1.0, 0.0, false, false, 0.01}},
      {"dusk-snow", {0.35, 0.0, false, false, 0.015}},
      {"night-snow", {0.04, 0.0, true, false, 0.02}},
      {"day-thaw", {0.9, 0.5, false, false, 0.01}},
  };
  auto it = kPresets.find(name);
  if (it == kPresets.end()) return std::nullopt;
  return it->second;
}

struct SynthDatasetConfig {
  WorldConfig world = WorldConfig::smooth_loop();
  CameraModel camera;
  TraversalConfig teach{0.0, 0.0, 0.22, 0.3, 3.0, {}, 1};
  std::string teach_condition = "day-green";
  TraversalConfig repeat{0.04, 0.03, 0.22, 0.3, 3.0, {}, 0};
  /// Repeat runs with fixed, named conditions (runs 1..N, in order).
  std::vector<NamedCondition> named;
  /// Additional repeat runs with randomly drawn conditions (after `named`).
  int random_repeats = 0;
  std::uint64_t seed = 1;
  double label_noise_sigma = 0.0;
  double anchor_gate = 2.0;

  static SynthDatasetConfig from_config(const ConfigFile& cfg) {
    cfg.check_keys("world", {"preset", "landmark_count", "texture_seed",
                             "waypoints", "ground_texture", "landmark_min_offset",
                             "landmark_max_offset"});
    cfg.check_keys("camera", {"width", "height", "focal", "cx", "cy", "baseline",
                              "mount_height"});
    cfg.check_keys("teach", {"spacing_mean", "spacing_jitter", "seed", "condition"});
    cfg.check_keys("repeat", {"lateral_sigma", "heading_sigma", "spacing_mean",
                              "spacing_jitter", "correlation_length"});
    cfg.check_keys("dataset", {"seed", "conditions", "random_repeats",
                               "label_noise_sigma", "anchor_gate"});

    SynthDatasetConfig c;
    const std::string preset = cfg.get_string("world", "preset", "smooth_loop");
    if (preset == "smooth_loop")
      c.world = WorldConfig::smooth_loop();
    else if (preset == "sharp_turns")
      c.world = WorldConfig::sharp_turns();
    else
      throw ConfigError("[world] preset: unknown '" + preset + "'");
    if (cfg.has("world", "waypoints")) {
      c.world.waypoints.clear();
      for (const auto& pt : detail::split(cfg.get_string("world", "waypoints", ""), ';')) {
        std::istringstream ss(pt);
        Vec2 v;
        if (!(ss >> v.x >> v.y))
          throw ConfigError("[world] waypoints: bad point '" + pt + "'");
        c.world.waypoints.push_back(v);
      }
    }
    c.world.landmark_count =
        int(cfg.get_int("world", "landmark_count", c.world.landmark_count));
    c.world.texture_seed =
        std::uint64_t(cfg.get_int("world", "texture_seed", (long long)c.world.texture_seed));
    c.world.ground_texture = cfg.get_bool("world", "ground_texture", true);
    c.world.landmark_min_offset =
        cfg.get_double("world", "landmark_min_offset", c.world.landmark_min_offset);
    c.world.landmark_max_offset =
        cfg.get_double("world", "landmark_max_offset", c.world.landmark_max_offset);
    c.world.validate();

    const int w = int(cfg.get_int("camera", "width", 128));
    const int h = int(cfg.get_int("camera", "height", 96));
    c.camera = CameraModel::with_size(w, h);
    c.camera.focal = cfg.get_double("camera", "focal", c.camera.focal);
    c.camera.cx = cfg.get_double("camera", "cx", c.camera.cx);
    c.camera.cy = cfg.get_double("camera", "cy", c.camera.cy);
    c.camera.baseline = cfg.get_double("camera", "baseline", c.camera.baseline);
    c.camera.mount_height = cfg.get_double("camera", "mount_height", c.camera.mount_height);
    c.camera.validate();

    c.teach.keyframe_spacing_mean = cfg.get_double("teach", "spacing_mean", c.teach.keyframe_spacing_mean);
    c.teach.keyframe_spacing_jitter = cfg.get_double("teach", "spacing_jitter", c.teach.keyframe_spacing_jitter);
    c.teach.seed = std::uint64_t(cfg.get_int("teach", "seed", (long long)c.teach.seed));
    c.teach_condition = cfg.get_string("teach", "condition", c.teach_condition);

    c.repeat.lateral_sigma = cfg.get_double("repeat", "lateral_sigma", c.repeat.lateral_sigma);
    c.repeat.heading_sigma = cfg.get_double("repeat", "heading_sigma", c.repeat.heading_sigma);
    c.repeat.keyframe_spacing_mean = cfg.get_double("repeat", "spacing_mean", c.repeat.keyframe_spacing_mean);
    c.repeat.keyframe_spacing_jitter = cfg.get_double("repeat", "spacing_jitter", c.repeat.keyframe_spacing_jitter);
    c.repeat.correlation_length = cfg.get_double("repeat", "correlation_length", c.repeat.correlation_length);

    c.seed = std::uint64_t(cfg.get_int("dataset", "seed", (long long)c.seed));
    c.random_repeats = int(cfg.get_int("dataset", "random_repeats", 0));
    c.label_noise_sigma = cfg.get_double("dataset", "label_noise_sigma", 0.0);
    c.anchor_gate = cfg.get_double("dataset", "anchor_gate", 2.0);

    c.teach.condition = c.resolve_condition(cfg, c.teach_condition);
    for (const auto& name : cfg.get_list("dataset", "conditions"))
      c.named.push_back({name, c.resolve_condition(cfg, name)});
    c.teach.validate();
    c.repeat.validate();
    if (c.random_repeats < 0) throw ConfigError("[dataset] random_repeats must be >= 0");
    return c;
  }

  /// A `[condition.NAME]` section overrides (or defines) the preset NAME.
  static ConditionParams resolve_condition(const ConfigFile& cfg, const std::string& name) {
    const std::string sec = "condition." + name;
    auto preset = condition_preset(name);
    if (!preset && !cfg.has_section(sec))
      throw ConfigError("unknown condition '" + name + "' (no preset and no [" + sec + "] section)");
    ConditionParams p = preset.value_or(ConditionParams{});
    cfg.check_keys(sec, {"illumination", "season", "headlights", "sun_flare", "noise_sigma"});
    p.illumination = cfg.get_double(sec, "illumination", p.illumination);
    p.season = cfg.get_double(sec, "season", p.season);
    p.headlights = cfg.get_bool(sec, "headlights", p.headlights);
    p.sun_flare = cfg.get_bool(sec, "sun_flare", p.sun_flare);
    p.noise_sigma = cfg.get_double(sec, "noise_sigma", p.noise_sigma);
    p.validate();
    return p;
  }
};

/// Draws a condition across the lighting/season space; about a third of the
/// draws are night runs with headlights.
template <typename Rng>
NamedCondition random_condition(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ConditionParams p;
  if (u(rng) < 0.3) {
    p.illumination = 0.02 + 0.08 * u(rng);
    p.headlights = true;
  } else {
    p.illumination = 0.15 + 0.85 * u(rng);
  }
  p.season = u(rng);
  p.sun_flare = p.illumination > 0.6 && u(rng) < 0.2;
  p.noise_sigma = 0.01 + 0.01 * u(rng);
  char buf[64];
  std::snprintf(buf, sizeof buf, "mix-i%.2f-s%.2f%s%s", p.illumination, p.season,
                p.headlights ? "-hl" : "", p.sun_flare ? "-fl" : "");
  return {buf, p};
}

struct GeneratedDataset {
  PoseGraph graph;
  std::string graph_path;
  std::vector<int> named_runs;
  std::vector<int> random_runs;
  std::vector<Trajectory> trajectories;  // ground truth, index = run
  std::vector<NamedCondition> conditions;  // index = run
};

/// Teach run, named repeats, random repeats, all rendered. Without an output
/// directory nothing is written and image references stay empty.
inline GeneratedDataset generate_dataset(const SynthDatasetConfig& cfg,
                                         const std::string& out_dir = {}) {
  namespace fs = std::filesystem;
  GeneratedDataset ds;
  const Scene scene(cfg.world);
  ds.trajectories.push_back(generate_teach(cfg.world, cfg.teach));

  std::vector<NamedCondition> conds{{cfg.teach_condition, cfg.teach.condition}};
  for (const auto& nc : cfg.named) conds.push_back(nc);
  std::mt19937_64 cond_rng(detail::splitmix64(cfg.seed ^ 0xC0FFEEull));
  for (int i = 0; i < cfg.random_repeats; ++i) conds.push_back(random_condition(cond_rng));

  for (std::size_t run = 1; run < conds.size(); ++run) {
    TraversalConfig tc = cfg.repeat;
    tc.condition = conds[run].params;
    tc.seed = detail::splitmix64(cfg.seed * 1000 + run);
    ds.trajectories.push_back(generate_repeat(ds.trajectories[0], tc));
    (run <= cfg.named.size() ? ds.named_runs : ds.random_runs).push_back(int(run));
  }

  GraphBuildOptions opts;
  opts.label_noise_sigma = cfg.label_noise_sigma;
  opts.anchor_gate = cfg.anchor_gate;
  opts.noise_seed = detail::splitmix64(cfg.seed ^ 0x5EEDull);
  for (const auto& c : conds) opts.conditions.push_back(c.name);
  auto rel_path = [](const VertexId& v, const char* side) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "images/run_%03d/%05d_%s.png", v.run, v.index, side);
    return std::string(buf);
  };
  if (!out_dir.empty())
    opts.image_ref = [&](const VertexId& v) {
      return std::make_pair(rel_path(v, "l"), rel_path(v, "r"));
    };
  std::vector<std::vector<Pose2>> repeats;
  for (std::size_t r = 1; r < ds.trajectories.size(); ++r)
    repeats.push_back(ds.trajectories[r].poses);
  ds.graph = build_graph(ds.trajectories[0].poses, repeats, opts);
  ds.conditions = conds;

  if (out_dir.empty()) return ds;
  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "images.manifest");
  manifest << "# run index left right\n";
  for (std::size_t run = 0; run < ds.trajectories.size(); ++run) {
    char dir[32];
    std::snprintf(dir, sizeof dir, "images/run_%03d", int(run));
    fs::create_directories(fs::path(out_dir) / dir);
    const auto& traj = ds.trajectories[run];
    for (std::size_t i = 0; i < traj.poses.size(); ++i) {
      const VertexId v{int(run), int(i)};
      const StereoImage img = render_stereo(traj.poses[i], scene, cfg.camera, conds[run].params);
      write_png(img.left, (fs::path(out_dir) / rel_path(v, "l")).string());
      write_png(img.right, (fs::path(out_dir) / rel_path(v, "r")).string());
      manifest << v.run << " " << v.index << " " << rel_path(v, "l") << " "
               << rel_path(v, "r") << "\n";
    }
  }
  ds.graph_path = (fs::path(out_dir) / "graph.pgraph").string();
  save(ds.graph, ds.graph_path);
  return ds;
}

// ---------------------------------------------------------------------------

/// Resolves vertices to stereo images (paths relative to `base_dir`),
/// resized to the network input size, cached in memory.
class ImageStore {
 public:
  ImageStore(const PoseGraph& graph, std::string base_dir, int width, int height)
      : graph_(&graph), base_(std::move(base_dir)), width_(width), height_(height) {}

  int width() const { return width_; }
  int height() const { return height_; }

  /// Injects an image directly (in-memory datasets, tests).
  void put(const VertexId& v, StereoImage img) { cache_[v] = std::move(img); }

  const StereoImage& get(const VertexId& v) {
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
    const Keyframe& kf = graph_->keyframe(v);
    if (kf.image_left.empty() || kf.image_right.empty())
      throw ImageError("vertex " + to_string(v) + " has no image reference");
    StereoImage img;
    try {
      img.left = resize_nearest(read_png(resolve(kf.image_left)), width_, height_);
      img.right = resize_nearest(read_png(resolve(kf.image_right)), width_, height_);
    } catch (const ImageError& e) {
      throw ImageError("vertex " + to_string(v) + ": " + e.what());
    }
    return cache_.emplace(v, std::move(img)).first->second;
  }

  /// Writes the 12-channel stack [live left, live right, map left, map
  /// right] into slot `i` of `batch`, scaled to [0,1].
  void fill(Tensor4<float>& batch, int i, const VertexId& live, const VertexId& map) {
    const StereoImage* views[2] = {&get(live), &get(map)};
    const std::size_t hw = std::size_t(height_) * width_;
    float* dst = batch.data.data() + std::size_t(i) * batch.sample_size();
    int ch = 0;
    for (const auto* st : views)
      for (const Image* im : {&st->left, &st->right}) {
        for (int k = 0; k < 3; ++k, ++ch) {
          float* plane = dst + std::size_t(ch) * hw;
          for (std::size_t p = 0; p < hw; ++p) plane[p] = im->rgb[p * 3 + k] * (1.0f / 255.0f);
        }
      }
  }

 private:
  std::string resolve(const std::string& p) const {
    namespace fs = std::filesystem;
    const fs::path path(p);
    if (path.is_absolute() || base_.empty()) return p;
    return (fs::path(base_) / path).string();
  }

  const PoseGraph* graph_;
  std::string base_;
  int width_, height_;
  std::map<VertexId, StereoImage> cache_;
};

/// Renders every keyframe of a generated dataset straight into `store`,
/// resized to the store's size.
inline void render_into(const GeneratedDataset& ds, const SynthDatasetConfig& cfg,
                        ImageStore& store) {
  const Scene scene(cfg.world);
  for (std::size_t run = 0; run < ds.trajectories.size(); ++run) {
    const auto& traj = ds.trajectories[run];
    for (std::size_t i = 0; i < traj.poses.size(); ++i) {
      StereoImage img = render_stereo(traj.poses[i], scene, cfg.camera, ds.conditions[run].params);
      img.left = resize_nearest(img.left, store.width(), store.height());
      img.right = resize_nearest(img.right, store.width(), store.height());
      store.put({int(run), int(i)}, std::move(img));
    }
  }
}

}  // namespace tnr

#endif  // TNR_DATASET_HPP_
