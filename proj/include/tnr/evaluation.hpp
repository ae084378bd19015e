// Evaluation harness: teach x repeat RMSE matrices, integrated VO tracks,
// standalone localization traces, the propagate-and-correct path-following
// loop, and error distributions.

#ifndef TNR_EVALUATION_HPP_
#define TNR_EVALUATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tnr/dataset.hpp"
#include "tnr/geometry.hpp"
#include "tnr/model.hpp"
#include "tnr/plot.hpp"
#include "tnr/pose_graph.hpp"

namespace tnr {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (live, map) vertex pair; the prediction is the pose of live relative to map.
using VertexPair = std::pair<VertexId, VertexId>;

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<Pose2> predict(const std::vector<VertexPair>& pairs) = 0;

  Pose2 predict_one(const VertexId& live, const VertexId& map) {
    return predict({{live, map}}).front();
  }
};

/// Ground truth read off the graph.
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(const PoseGraph& g) : graph_(&g) {}
  std::vector<Pose2> predict(const std::vector<VertexPair>& pairs) override {
    std::vector<Pose2> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      auto xi = graph_->relative_pose(a, b);
      if (!xi) throw EvalError("oracle: no path between " + to_string(a) + " and " + to_string(b));
      out.push_back(*xi);
    }
    return out;
  }

 private:
  const PoseGraph* graph_;
};

/// Adds a constant per-component bias to another predictor.
class BiasedPredictor : public Predictor {
 public:
  BiasedPredictor(std::shared_ptr<Predictor> inner, Pose2 bias)
      : inner_(std::move(inner)), bias_(bias) {}
  std::vector<Pose2> predict(const std::vector<VertexPair>& pairs) override {
    auto out = inner_->predict(pairs);
    for (auto& p : out) p = Pose2(p.x + bias_.x, p.y + bias_.y, p.theta + bias_.theta);
    return out;
  }

 private:
  std::shared_ptr<Predictor> inner_;
  Pose2 bias_;
};

/// Adds i.i.d. zero-mean Gaussian noise (sigma per component, theta in radians).
class NoisyPredictor : public Predictor {
 public:
  NoisyPredictor(std::shared_ptr<Predictor> inner, std::array<double, 3> sigma,
                 std::uint64_t seed)
      : inner_(std::move(inner)), sigma_(sigma), rng_(seed) {}
  std::vector<Pose2> predict(const std::vector<VertexPair>& pairs) override {
    auto out = inner_->predict(pairs);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& p : out) {
      const double dx = sigma_[0] * n(rng_), dy = sigma_[1] * n(rng_), dt = sigma_[2] * n(rng_);
      p = Pose2(p.x + dx, p.y + dy, p.theta + dt);
    }
    return out;
  }

 private:
  std::shared_ptr<Predictor> inner_;
  std::array<double, 3> sigma_;
  std::mt19937_64 rng_;
};

/// Runs a trained regressor on stacked [live, map] stereo inputs.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(RegressorState<float> state, ImageStore& store, int batch_size = 64)
      : state_(std::move(state)), net_(state_.config), store_(&store), batch_(batch_size) {}

  std::vector<Pose2> predict(const std::vector<VertexPair>& pairs) override {
    const auto& c = state_.config;
    std::vector<Pose2> out;
    out.reserve(pairs.size());
    for (std::size_t b = 0; b < pairs.size(); b += std::size_t(batch_)) {
      const std::size_t e = std::min(pairs.size(), b + std::size_t(batch_));
      Tensor4<float> t(int(e - b), c.input_channels, c.input_height, c.input_width);
      for (std::size_t i = b; i < e; ++i) store_->fill(t, int(i - b), pairs[i].first, pairs[i].second);
      const Mat<float> pred = net_.forward(state_.params, t);
      for (Eigen::Index i = 0; i < pred.cols(); ++i)
        out.emplace_back(pred(0, i), pred(1, i), pred(2, i));
    }
    return out;
  }

 private:
  RegressorState<float> state_;
  Regressor<float> net_;
  ImageStore* store_;
  int batch_;
};

// ---------------------------------------------------------------------------

struct TraceEntry {
  VertexId live;
  VertexId map;
  Pose2 prediction;
  Pose2 target;
};

/// Per-component error prediction - target, theta wrapped.
inline Pose2 pose_error(const Pose2& pred, const Pose2& target) {
  return Pose2(pred.x - target.x, pred.y - target.y, wrap_angle(pred.theta - target.theta));
}

struct Rmse {
  double x = 0.0, y = 0.0, theta_deg = 0.0;
  std::size_t count = 0;
};

inline Rmse rmse_of(const std::vector<TraceEntry>& trace) {
  Rmse r;
  if (trace.empty()) throw EvalError("rmse of an empty trace");
  double sx = 0.0, sy = 0.0, st = 0.0;
  for (const auto& e : trace) {
    const Pose2 d = pose_error(e.prediction, e.target);
    sx += d.x * d.x;
    sy += d.y * d.y;
    st += d.theta * d.theta;
  }
  const double n = double(trace.size());
  r.x = std::sqrt(sx / n);
  r.y = std::sqrt(sy / n);
  r.theta_deg = rad_to_deg(std::sqrt(st / n));
  r.count = trace.size();
  return r;
}

/// Vertices of `run` sharing `v`'s teach anchor (the anchor itself for run 0).
inline std::vector<VertexId> colocalized_in(const PoseGraph& g, const VertexId& v, int run) {
  const auto anchor = g.anchor(v);
  if (!anchor) return {};
  if (run == 0) return {anchor->teach};
  std::vector<VertexId> out;
  for (const auto& u : g.localized_to(anchor->teach.index))
    if (u.run == run) out.push_back(u);
  std::sort(out.begin(), out.end());
  return out;
}

/// Pairs each keyframe of `repeat_run` with the lowest-index keyframe of
/// `teach_run` anchored to the same teach vertex.
inline std::vector<VertexPair> localization_pairs(const PoseGraph& g, int repeat_run, int teach_run) {
  std::vector<VertexPair> out;
  for (int i = 0; i < g.run_length(repeat_run); ++i) {
    const VertexId v{repeat_run, i};
    if (repeat_run != 0 && !g.spatial_edge(v)) continue;
    const auto partners = colocalized_in(g, v, teach_run);
    if (!partners.empty()) out.push_back({v, partners.front()});
  }
  return out;
}

inline Pose2 target_pose(const PoseGraph& g, const VertexId& live, const VertexId& map) {
  auto xi = g.relative_pose(live, map);
  if (!xi) throw EvalError("no label between " + to_string(live) + " and " + to_string(map) + " (unanchored vertex)");
  return *xi;
}

inline std::vector<TraceEntry> run_pairs(const PoseGraph& g, Predictor& model,
                                         const std::vector<VertexPair>& pairs) {
  const auto pred = model.predict(pairs);
  std::vector<TraceEntry> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out.push_back({pairs[i].first, pairs[i].second, pred[i], target_pose(g, pairs[i].first, pairs[i].second)});
  return out;
}

inline std::vector<TraceEntry> localize_standalone(const PoseGraph& g, Predictor& loc_model,
                                                   int repeat_run, int teach_run) {
  if (!g.has_run(repeat_run) || !g.has_run(teach_run))
    throw EvalError("localize_standalone: unknown run");
  const auto pairs = localization_pairs(g, repeat_run, teach_run);
  if (pairs.empty())
    throw EvalError("run " + std::to_string(repeat_run) + " has no keyframes co-localizable with run " +
                    std::to_string(teach_run));
  return run_pairs(g, loc_model, pairs);
}

/// VO predictions along a run: live (r, i+1) against map (r, i).
inline std::vector<TraceEntry> vo_standalone(const PoseGraph& g, Predictor& vo_model, int run) {
  std::vector<VertexPair> pairs;
  for (int i = 0; i + 1 < g.run_length(run); ++i) pairs.push_back({{run, i + 1}, {run, i}});
  if (pairs.empty()) throw EvalError("run " + std::to_string(run) + " has no temporal edges");
  return run_pairs(g, vo_model, pairs);
}

struct RmseCell {
  int repeat_run = 0;
  int teach_run = 0;
  Rmse rmse;
  PairKind kind = PairKind::vo;
};

/// Diagonal cells are VO along the run; off-diagonal cells localize the row
/// run against the column run.
inline std::vector<RmseCell> rmse_matrix(const PoseGraph& g, Predictor& vo_model,
                                         Predictor& loc_model, const std::vector<int>& runs) {
  std::vector<RmseCell> cells;
  for (int r : runs)
    for (int t : runs) {
      RmseCell c;
      c.repeat_run = r;
      c.teach_run = t;
      if (r == t) {
        c.kind = PairKind::vo;
        c.rmse = rmse_of(vo_standalone(g, vo_model, r));
      } else {
        c.kind = PairKind::localization;
        c.rmse = rmse_of(localize_standalone(g, loc_model, r, t));
      }
      cells.push_back(c);
    }
  return cells;
}

/// Left fold of compose from the identity; returns n + 1 poses.
inline std::vector<Pose2> integrate_vo(const std::vector<Pose2>& relatives) {
  std::vector<Pose2> track{Pose2::identity()};
  track.reserve(relatives.size() + 1);
  for (const auto& xi : relatives) track.push_back(compose(track.back(), xi));
  return track;
}

/// Integrated track of the run's stored temporal edges.
inline std::vector<Pose2> integrate_vo(const PoseGraph& g, int run) {
  return integrate_vo(g.run(run).temporal);
}

// ---------------------------------------------------------------------------

struct FusionWeights {
  double vo = 0.3;
  double loc = 0.7;

  void validate() const {
    if (vo < 0.0 || loc < 0.0 || std::abs(vo + loc - 1.0) > 1e-9)
      throw EvalError("fusion weights must be non-negative and sum to 1");
  }
};

/// Per-component weighted average; theta averaged on the wrapped difference
/// relative to the propagated estimate.
inline Pose2 fuse(const Pose2& propagated, const Pose2& localized, const FusionWeights& w) {
  return Pose2(w.vo * propagated.x + w.loc * localized.x,
               w.vo * propagated.y + w.loc * localized.y,
               propagated.theta + w.loc * wrap_angle(localized.theta - propagated.theta));
}

struct FusionStep {
  int step = 0;  // live keyframe index
  int teach_index = 0;
  Pose2 propagated;  // against the selected teach keyframe
  Pose2 localized;
  Pose2 corrected;
  Pose2 target;
};

struct FusionTrace {
  int repeat_run = 0;
  int teach_run = 0;
  std::vector<FusionStep> steps;
  /// Set when the last teach keyframe was reached before the live run
  /// ended; `steps` stops there.
  bool truncated = false;
};

/// Propagate-and-correct loop over the keyframes of `repeat_run` against
/// `teach_run`. Candidates at each step are the current teach keyframe and
/// the next `window` ones.
inline FusionTrace path_follow(const PoseGraph& g, Predictor& vo_model, Predictor& loc_model,
                               int repeat_run, int teach_run, int window,
                               const FusionWeights& w = {}, const LossWeights& norm_w = {}) {
  if (window < 1) throw EvalError("path_follow: window must be >= 1");
  w.validate();
  if (!g.has_run(repeat_run) || !g.has_run(teach_run))
    throw EvalError("path_follow: unknown run");
  FusionTrace tr;
  tr.repeat_run = repeat_run;
  tr.teach_run = teach_run;
  const int n_live = g.run_length(repeat_run);
  const int last = g.run_length(teach_run) - 1;

  std::vector<VertexPair> vo_pairs;
  for (int k = 1; k < n_live; ++k) vo_pairs.push_back({{repeat_run, k}, {repeat_run, k - 1}});
  const auto vo = vo_model.predict(vo_pairs);

  FusionStep s0;
  s0.teach_index = 0;
  s0.localized = loc_model.predict_one({repeat_run, 0}, {teach_run, 0});
  s0.propagated = s0.localized;
  s0.corrected = s0.localized;
  s0.target = target_pose(g, {repeat_run, 0}, {teach_run, 0});
  tr.steps.push_back(s0);

  for (int k = 1; k < n_live; ++k) {
    const FusionStep& prev = tr.steps.back();
    const int tau = prev.teach_index;
    if (tau == last) {
      tr.truncated = true;
      break;
    }
    const Pose2 q = compose(prev.corrected, vo[std::size_t(k - 1)]);
    int best = tau;
    Pose2 best_q = q;
    double best_norm = weighted_norm(q, norm_w);
    for (int j = tau + 1; j <= std::min(last, tau + window); ++j) {
      const Pose2 qj = compose(inverse(g.chain(teach_run, tau, j)), q);
      const double nj = weighted_norm(qj, norm_w);
      if (nj < best_norm) {
        best = j;
        best_q = qj;
        best_norm = nj;
      }
    }
    FusionStep s;
    s.step = k;
    s.teach_index = best;
    s.propagated = best_q;
    s.localized = loc_model.predict_one({repeat_run, k}, {teach_run, best});
    s.corrected = fuse(best_q, s.localized, w);
    s.target = target_pose(g, {repeat_run, k}, {teach_run, best});
    tr.steps.push_back(s);
  }
  return tr;
}

/// Errors of the corrected poses against their targets.
inline std::vector<Pose2> fusion_errors(const FusionTrace& tr) {
  std::vector<Pose2> out;
  for (const auto& s : tr.steps) out.push_back(pose_error(s.corrected, s.target));
  return out;
}

inline std::vector<Pose2> trace_errors(const std::vector<TraceEntry>& tr) {
  std::vector<Pose2> out;
  for (const auto& e : tr) out.push_back(pose_error(e.prediction, e.target));
  return out;
}

/// Sorted absolute errors per component (theta in radians).
struct ErrorCdf {
  std::vector<double> x, y, theta;
};

inline ErrorCdf error_cdf(const std::vector<Pose2>& errors) {
  ErrorCdf c;
  for (const auto& e : errors) {
    c.x.push_back(std::abs(e.x));
    c.y.push_back(std::abs(e.y));
    c.theta.push_back(std::abs(e.theta));
  }
  std::sort(c.x.begin(), c.x.end());
  std::sort(c.y.begin(), c.y.end());
  std::sort(c.theta.begin(), c.theta.end());
  return c;
}

inline ErrorCdf error_cdf(const FusionTrace& tr) { return error_cdf(fusion_errors(tr)); }

// ---------------------------------------------------------------------------

struct VoTrack {
  int run = 0;
  std::vector<Pose2> predicted;
  std::vector<Pose2> labels;
};

struct EvalReport {
  std::vector<int> runs;
  std::map<int, std::string> conditions;
  std::vector<RmseCell> rmse;
  std::vector<VoTrack> vo_tracks;
  std::map<std::pair<int, int>, ErrorCdf> loc_cdfs;  // (repeat, teach)
  std::vector<FusionTrace> fusion;
};

struct EvalOptions {
  int window = 5;
  FusionWeights weights;
  /// Ordered (repeat, teach) pairs for path following; empty = every
  /// off-diagonal pair of `runs`.
  std::vector<std::pair<int, int>> fusion_pairs;
};

inline EvalReport evaluate(const PoseGraph& g, Predictor& vo_model, Predictor& loc_model,
                           const std::vector<int>& runs, const EvalOptions& opts = {}) {
  EvalReport rep;
  rep.runs = runs;
  for (int r : runs) rep.conditions[r] = g.run_condition(r);
  rep.rmse = rmse_matrix(g, vo_model, loc_model, runs);
  for (int r : runs) {
    VoTrack t;
    t.run = r;
    std::vector<Pose2> pred;
    for (const auto& e : vo_standalone(g, vo_model, r)) pred.push_back(e.prediction);
    t.predicted = integrate_vo(pred);
    t.labels = integrate_vo(g, r);
    rep.vo_tracks.push_back(std::move(t));
  }
  for (int r : runs)
    for (int t : runs)
      if (r != t) rep.loc_cdfs[{r, t}] = error_cdf(trace_errors(localize_standalone(g, loc_model, r, t)));
  auto pairs = opts.fusion_pairs;
  if (pairs.empty())
    for (int r : runs)
      for (int t : runs)
        if (r != t) pairs.push_back({r, t});
  for (const auto& [r, t] : pairs)
    rep.fusion.push_back(path_follow(g, vo_model, loc_model, r, t, opts.window, opts.weights));
  return rep;
}

// ---------------------------------------------------------------------------
// Report output

inline void write_rmse_csv(const std::vector<RmseCell>& cells, std::ostream& os) {
  os << "repeat_run,teach_run,rmse_x_m,rmse_y_m,rmse_theta_deg,kind\n";
  char buf[160];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6g,%.6g,%.6g,%s\n", c.repeat_run, c.teach_run,
                  c.rmse.x, c.rmse.y, c.rmse.theta_deg, to_string(c.kind));
    os << buf;
  }
}

/// One table per DOF, rows = repeat, columns = teach, labelled
/// `run:condition`.
inline void write_rmse_tables(const EvalReport& rep, std::ostream& os) {
  auto label = [&](int r) {
    auto it = rep.conditions.find(r);
    return std::to_string(r) + ":" + (it == rep.conditions.end() ? std::string("-") : it->second);
  };
  const char* names[3] = {"x_m", "y_m", "theta_deg"};
  for (int d = 0; d < 3; ++d) {
    os << "# rmse_" << names[d] << "\nrepeat\\teach";
    for (int t : rep.runs) os << "," << label(t);
    os << "\n";
    for (int r : rep.runs) {
      os << label(r);
      for (int t : rep.runs)
        for (const auto& c : rep.rmse)
          if (c.repeat_run == r && c.teach_run == t) {
            const double v = d == 0 ? c.rmse.x : d == 1 ? c.rmse.y : c.rmse.theta_deg;
            char buf[32];
            std::snprintf(buf, sizeof buf, ",%.6g", v);
            os << buf;
          }
      os << "\n";
    }
    os << "\n";
  }
}

inline void write_vo_tracks_csv(const std::vector<VoTrack>& tracks, std::ostream& os) {
  os << "run,index,pred_x,pred_y,pred_theta,label_x,label_y,label_theta\n";
  char buf[256];
  for (const auto& t : tracks)
    for (std::size_t i = 0; i < t.predicted.size(); ++i) {
      const auto& p = t.predicted[i];
      const auto& l = t.labels[i];
      std::snprintf(buf, sizeof buf, "%d,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t.run, i, p.x, p.y,
                    p.theta, l.x, l.y, l.theta);
      os << buf;
    }
}

inline void write_cdf_csv(const std::string& source, const ErrorCdf& c, std::ostream& os,
                          bool header) {
  if (header) os << "source,rank,fraction,abs_err_x_m,abs_err_y_m,abs_err_theta_deg\n";
  char buf[256];
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6g,%.9g,%.9g,%.9g\n", source.c_str(), i,
                  double(i + 1) / double(c.x.size()), c.x[i], c.y[i], rad_to_deg(c.theta[i]));
    os << buf;
  }
}

inline void write_fusion_csv(const std::vector<FusionTrace>& traces, std::ostream& os) {
  os << "repeat_run,teach_run,step,teach_index,prop_x,prop_y,prop_theta,loc_x,loc_y,loc_theta,"
        "corr_x,corr_y,corr_theta,target_x,target_y,target_theta,truncated\n";
  char buf[512];
  for (const auto& tr : traces)
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      const auto& s = tr.steps[i];
      const bool trunc = tr.truncated && i + 1 == tr.steps.size();
      std::snprintf(buf, sizeof buf,
                    "%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n",
                    tr.repeat_run, tr.teach_run, s.step, s.teach_index, s.propagated.x,
                    s.propagated.y, s.propagated.theta, s.localized.x, s.localized.y,
                    s.localized.theta, s.corrected.x, s.corrected.y, s.corrected.theta, s.target.x,
                    s.target.y, s.target.theta, trunc ? 1 : 0);
      os << buf;
    }
}

/// Three side-by-side teach x repeat grids (x, y, theta), shaded per DOF
/// relative to that DOF's largest entry.
inline void save_rmse_heatmap(const EvalReport& rep, const std::string& path) {
  const int n = int(rep.runs.size()), cell = 48, gap = 40, top = 50, left = 60;
  const int panel = std::max(1, n) * cell;
  Canvas cv(left + 3 * (panel + gap), top + panel + 40);
  const char* names[3] = {"X [M]", "Y [M]", "THETA [DEG]"};
  for (int d = 0; d < 3; ++d) {
    auto val = [&](const RmseCell& c) { return d == 0 ? c.rmse.x : d == 1 ? c.rmse.y : c.rmse.theta_deg; };
    double vmax = 0.0;
    for (const auto& c : rep.rmse) vmax = std::max(vmax, val(c));
    const int ox = left + d * (panel + gap);
    cv.text(ox, 14, names[d]);
    for (int i = 0; i < n; ++i) {
      cv.text(ox + i * cell + cell / 2 - 4, top - 14, std::to_string(rep.runs[std::size_t(i)]));
      if (d == 0) cv.text(left - 24, top + i * cell + cell / 2 - 5, std::to_string(rep.runs[std::size_t(i)]));
    }
    for (const auto& c : rep.rmse) {
      const auto ri = std::find(rep.runs.begin(), rep.runs.end(), c.repeat_run) - rep.runs.begin();
      const auto ti = std::find(rep.runs.begin(), rep.runs.end(), c.teach_run) - rep.runs.begin();
      const double f = vmax > 0.0 ? val(c) / vmax : 0.0;
      const Color col{255, std::uint8_t(255 - 200 * f), std::uint8_t(255 - 235 * f)};
      const int x = ox + int(ti) * cell, y = top + int(ri) * cell;
      cv.fill_rect(x + 1, y + 1, x + cell, y + cell, col);
      const std::string s = format_tick(val(c));
      cv.text(x + cell / 2 - Canvas::text_width(s, 1) / 2, y + cell / 2 - 2, s, {0, 0, 0}, 1);
    }
  }
  cv.save(path);
}

/// Writes rmse_matrix.csv, rmse_tables.csv, vo_tracks.csv, error_cdf.csv,
/// fusion_trace.csv and one chart per artifact; returns the paths written.
inline std::vector<std::string> write_report(const EvalReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string p = (fs::path(dir) / name).string();
    written.push_back(p);
    std::ofstream f(p);
    if (!f) throw EvalError("cannot write " + p);
    return f;
  };
  {
    auto f = open("rmse_matrix.csv");
    write_rmse_csv(rep.rmse, f);
  }
  {
    auto f = open("rmse_tables.csv");
    write_rmse_tables(rep, f);
  }
  {
    auto f = open("vo_tracks.csv");
    write_vo_tracks_csv(rep.vo_tracks, f);
  }
  {
    auto f = open("error_cdf.csv");
    bool header = true;
    for (const auto& [key, c] : rep.loc_cdfs) {
      write_cdf_csv("loc_" + std::to_string(key.first) + "_" + std::to_string(key.second), c, f, header);
      header = false;
    }
    for (const auto& tr : rep.fusion) {
      write_cdf_csv("fusion_" + std::to_string(tr.repeat_run) + "_" + std::to_string(tr.teach_run),
                    error_cdf(tr), f, header);
      header = false;
    }
  }
  {
    auto f = open("fusion_trace.csv");
    write_fusion_csv(rep.fusion, f);
  }

  // Charts.
  {
    Chart ch("Integrated VO (solid: predicted, thin: labels)", "x [m]", "y [m]");
    ch.equal_aspect = true;
    for (std::size_t i = 0; i < rep.vo_tracks.size(); ++i) {
      const auto& t = rep.vo_tracks[i];
      Series p{"run " + std::to_string(t.run), {}, {}, int(i), 2};
      Series l{"", {}, {}, int(i), 1};
      for (const auto& q : t.predicted) p.x.push_back(q.x), p.y.push_back(q.y);
      for (const auto& q : t.labels) l.x.push_back(q.x), l.y.push_back(q.y);
      ch.series.push_back(std::move(l));
      ch.series.push_back(std::move(p));
    }
    const std::string p = (fs::path(dir) / "vo_tracks.png").string();
    ch.save(p);
    written.push_back(p);
  }
  const char* dof[3] = {"x", "y", "theta"};
  for (int d = 0; d < 3; ++d) {
    Chart ch(std::string("Localization error CDF, ") + dof[d],
             d == 2 ? "abs error [deg]" : "abs error [m]", "fraction");
    int k = 0;
    for (const auto& [key, c] : rep.loc_cdfs) {
      const auto& v = d == 0 ? c.x : d == 1 ? c.y : c.theta;
      Series s{std::to_string(key.first) + "/" + std::to_string(key.second), {}, {}, k++, 1};
      for (std::size_t i = 0; i < v.size(); ++i) {
        s.x.push_back(d == 2 ? rad_to_deg(v[i]) : v[i]);
        s.y.push_back(double(i + 1) / double(v.size()));
      }
      ch.series.push_back(std::move(s));
    }
    const std::string p = (fs::path(dir) / (std::string("error_cdf_") + dof[d] + ".png")).string();
    ch.save(p);
    written.push_back(p);
  }
  {
    Chart ch("Path following lateral error", "step", "y error [m]");
    int k = 0;
    for (const auto& tr : rep.fusion) {
      Series s{std::to_string(tr.repeat_run) + "/" + std::to_string(tr.teach_run), {}, {}, k++, 1};
      for (const auto& st : tr.steps) {
        s.x.push_back(st.step);
        s.y.push_back(st.corrected.y - st.target.y);
      }
      ch.series.push_back(std::move(s));
    }
    const std::string p = (fs::path(dir) / "fusion_lateral.png").string();
    ch.save(p);
    written.push_back(p);
  }
  {
    const std::string p = (fs::path(dir) / "rmse_matrix.png").string();
    save_rmse_heatmap(rep, p);
    written.push_back(p);
  }
  return written;
}

}  // namespace tnr

#endif  // TNR_EVALUATION_HPP_
