// Spatio-temporal pose graph: runs of keyframes chained by temporal (VO)
// edges, repeat keyframes anchored to the teach run (run 0) by spatial
// (localization) edges, plus the label samplers that turn the graph into
// training pairs.

#ifndef TNR_POSE_GRAPH_HPP_
#define TNR_POSE_GRAPH_HPP_

#include <algorithm>
#include <compare>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tnr/geometry.hpp"

namespace tnr {

struct VertexId {
  int run = 0;
  int index = 0;

  friend auto operator<=>(const VertexId&, const VertexId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const VertexId& v) {
    return os << "(" << v.run << "," << v.index << ")";
  }
};

inline std::string to_string(const VertexId& v) {
  return "(" + std::to_string(v.run) + "," + std::to_string(v.index) + ")";
}

struct Keyframe {
  VertexId id;
  std::string image_left;
  std::string image_right;
  std::string condition;
  double timestamp = 0.0;
};

struct TemporalEdge {
  VertexId from;
  VertexId to;
  Pose2 xi;  // pose of `to` relative to `from`
};

struct SpatialEdge {
  VertexId repeat;
  VertexId teach;
  Pose2 xi;  // pose of `repeat` relative to `teach`

  friend bool operator==(const SpatialEdge&, const SpatialEdge&) = default;
};

enum class PairKind { vo, localization };

inline const char* to_string(PairKind k) {
  return k == PairKind::vo ? "vo" : "loc";
}

inline PairKind parse_pair_kind(const std::string& s) {
  if (s == "vo") return PairKind::vo;
  if (s == "loc" || s == "localization") return PairKind::localization;
  throw std::invalid_argument("unknown pair kind '" + s + "' (expected vo|loc)");
}

/// Training sample: `a` is the live frame, `b` the map frame, `xi` the pose
/// of a relative to b.
struct LabeledPair {
  VertexId a;
  VertexId b;
  Pose2 xi;
  PairKind kind = PairKind::vo;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoseGraph {
 public:
  struct Run {
    std::vector<Keyframe> keyframes;
    std::vector<Pose2> temporal;  // temporal[i]: pose of i+1 relative to i
  };

  void add_run(int run, std::vector<Keyframe> keyframes,
               std::vector<Pose2> temporal_xis) {
    if (run < 0) throw GraphError("add_run: negative run index");
    if (runs_.count(run))
      throw GraphError("add_run: duplicate run index " + std::to_string(run));
    if (keyframes.empty()) throw GraphError("add_run: run has no keyframes");
    if (temporal_xis.size() + 1 != keyframes.size())
      throw GraphError("add_run: expected " +
                       std::to_string(keyframes.size() - 1) +
                       " temporal edges, got " +
                       std::to_string(temporal_xis.size()));
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
      const auto& id = keyframes[i].id;
      if (id.run != run || id.index != static_cast<int>(i))
        throw GraphError("add_run: keyframe " + to_string(id) +
                         " out of sequence for run " + std::to_string(run));
    }
    for (const auto& xi : temporal_xis)
      if (!xi.finite()) throw GraphError("add_run: non-finite temporal edge");
    runs_.emplace(run, Run{std::move(keyframes), std::move(temporal_xis)});
  }

  void add_spatial_edge(const VertexId& repeat, const VertexId& teach,
                        const Pose2& xi) {
    if (!contains(repeat))
      throw GraphError("add_spatial_edge: unknown vertex " + to_string(repeat));
    if (!contains(teach))
      throw GraphError("add_spatial_edge: unknown vertex " + to_string(teach));
    if (repeat.run == 0)
      throw GraphError("add_spatial_edge: repeat vertex must not be on run 0");
    if (teach.run != 0)
      throw GraphError("add_spatial_edge: teach vertex must be on run 0");
    if (spatial_.count(repeat))
      throw GraphError("add_spatial_edge: vertex " + to_string(repeat) +
                       " is already localized");
    if (!xi.finite()) throw GraphError("add_spatial_edge: non-finite pose");
    spatial_.emplace(repeat, SpatialEdge{repeat, teach, xi});
    by_teach_[teach.index].push_back(repeat);
  }

  bool contains(const VertexId& v) const {
    auto it = runs_.find(v.run);
    return it != runs_.end() && v.index >= 0 &&
           v.index < static_cast<int>(it->second.keyframes.size());
  }

  bool has_run(int run) const { return runs_.count(run) != 0; }

  std::vector<int> run_ids() const {
    std::vector<int> ids;
    for (const auto& [id, _] : runs_) ids.push_back(id);
    return ids;
  }

  const Run& run(int r) const {
    auto it = runs_.find(r);
    if (it == runs_.end())
      throw GraphError("unknown run " + std::to_string(r));
    return it->second;
  }

  int run_length(int r) const {
    return static_cast<int>(run(r).keyframes.size());
  }

  const Keyframe& keyframe(const VertexId& v) const {
    if (!contains(v)) throw GraphError("unknown vertex " + to_string(v));
    return run(v.run).keyframes[v.index];
  }

  std::string run_condition(int r) const {
    return run(r).keyframes.front().condition;
  }

  std::size_t num_keyframes() const {
    std::size_t n = 0;
    for (const auto& [_, r] : runs_) n += r.keyframes.size();
    return n;
  }

  std::size_t num_temporal_edges() const {
    std::size_t n = 0;
    for (const auto& [_, r] : runs_) n += r.temporal.size();
    return n;
  }

  const TemporalEdge temporal_edge(int r, int index_from) const {
    const auto& rr = run(r);
    if (index_from < 0 || index_from >= static_cast<int>(rr.temporal.size()))
      throw GraphError("no temporal edge from " +
                       to_string(VertexId{r, index_from}));
    return {{r, index_from}, {r, index_from + 1}, rr.temporal[index_from]};
  }

  const std::map<VertexId, SpatialEdge>& spatial_edges() const {
    return spatial_;
  }

  const SpatialEdge* spatial_edge(const VertexId& repeat) const {
    auto it = spatial_.find(repeat);
    return it == spatial_.end() ? nullptr : &it->second;
  }

  /// Repeat vertices localized to teach keyframe (0, teach_index).
  const std::vector<VertexId>& localized_to(int teach_index) const {
    static const std::vector<VertexId> kEmpty;
    auto it = by_teach_.find(teach_index);
    return it == by_teach_.end() ? kEmpty : it->second;
  }

  /// Pose of keyframe `to` relative to keyframe `from` along one run,
  /// compounding temporal edges (in either direction).
  Pose2 chain(int r, int from, int to) const {
    const auto& rr = run(r);
    const int n = static_cast<int>(rr.keyframes.size());
    if (from < 0 || from >= n || to < 0 || to >= n)
      throw GraphError("chain: index out of range on run " + std::to_string(r));
    Pose2 acc;
    const int lo = std::min(from, to);
    const int hi = std::max(from, to);
    for (int i = lo; i < hi; ++i) acc = compose(acc, rr.temporal[i]);
    return from <= to ? acc : inverse(acc);
  }

  /// Teach-run anchor of a vertex: the teach keyframe and the pose of `v`
  /// relative to it. Teach vertices anchor to themselves.
  std::optional<SpatialEdge> anchor(const VertexId& v) const {
    if (!contains(v)) throw GraphError("unknown vertex " + to_string(v));
    if (v.run == 0) return SpatialEdge{v, v, Pose2::identity()};
    if (const auto* e = spatial_edge(v)) return *e;
    return std::nullopt;
  }

  /// Pose of `a` relative to `b`, compounding spatial edges through the teach
  /// run when the vertices sit on different runs. Empty if either vertex is
  /// not anchored.
  std::optional<Pose2> relative_pose(const VertexId& a,
                                     const VertexId& b) const {
    if (a.run == b.run) return chain(a.run, b.index, a.index);
    const auto anchor_a = anchor(a);
    const auto anchor_b = anchor(b);
    if (!anchor_a || !anchor_b) return std::nullopt;
    const Pose2 teach_a_rel_teach_b =
        chain(0, anchor_b->teach.index, anchor_a->teach.index);
    return compose(inverse(anchor_b->xi),
                   compose(teach_a_rel_teach_b, anchor_a->xi));
  }

  friend bool operator==(const PoseGraph& l, const PoseGraph& r) {
    if (l.runs_.size() != r.runs_.size() || l.spatial_ != r.spatial_)
      return false;
    for (const auto& [id, run] : l.runs_) {
      auto it = r.runs_.find(id);
      if (it == r.runs_.end()) return false;
      const auto& o = it->second;
      if (run.temporal != o.temporal ||
          run.keyframes.size() != o.keyframes.size())
        return false;
      for (std::size_t i = 0; i < run.keyframes.size(); ++i) {
        const auto& p = run.keyframes[i];
        const auto& q = o.keyframes[i];
        if (p.id != q.id || p.image_left != q.image_left ||
            p.image_right != q.image_right || p.condition != q.condition ||
            p.timestamp != q.timestamp)
          return false;
      }
    }
    return true;
  }

 private:
  std::map<int, Run> runs_;
  std::map<VertexId, SpatialEdge> spatial_;
  std::map<int, std::vector<VertexId>> by_teach_;
};

// ---------------------------------------------------------------------------
// Label sampling

/// One pair per temporal edge of `run`: a = (run, i+1), b = (run, i).
inline std::vector<LabeledPair> sample_vo_pairs(const PoseGraph& graph,
                                                int run) {
  const auto& r = graph.run(run);
  std::vector<LabeledPair> out;
  out.reserve(r.temporal.size());
  for (int i = 0; i < static_cast<int>(r.temporal.size()); ++i)
    out.push_back({{run, i + 1}, {run, i}, r.temporal[i], PairKind::vo});
  return out;
}

struct LocalizationSampling {
  /// Teach keyframes to walk along the teach chain before picking the
  /// partner vertex. Zero samples only in time.
  int spatial_hops = 0;
  /// When set, both vertices of every pair come from these runs.
  std::optional<std::set<int>> runs;
};

/// Draws `n` localization pairs: a random repeat vertex A, its teach anchor
/// (optionally shifted along the teach chain), then a different repeat
/// vertex B localized to that teach keyframe. Target is the pose of A
/// relative to B.
template <typename Rng>
std::vector<LabeledPair> sample_localization_pairs(
    const PoseGraph& graph, std::size_t n, Rng& rng,
    const LocalizationSampling& opts = {}) {
  if (opts.spatial_hops < 0)
    throw std::invalid_argument("spatial_hops must be >= 0");
  auto allowed = [&](int run) {
    return run > 0 && (!opts.runs || opts.runs->count(run));
  };
  std::vector<VertexId> candidates;
  std::set<int> runs_with_edges;
  for (const auto& [v, _] : graph.spatial_edges()) {
    if (!allowed(v.run)) continue;
    candidates.push_back(v);
    runs_with_edges.insert(v.run);
  }
  if (runs_with_edges.size() < 2)
    throw GraphError(
        "sample_localization_pairs: need >= 2 repeat runs with spatial edges");

  const int teach_len = graph.run_length(0);
  const std::size_t max_attempts = 100 * std::max<std::size_t>(n, 1);
  std::vector<LabeledPair> out;
  out.reserve(n);
  std::uniform_int_distribution<std::size_t> pick_a(0, candidates.size() - 1);
  std::uniform_int_distribution<int> pick_hop(-opts.spatial_hops,
                                              opts.spatial_hops);
  std::vector<VertexId> partners;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (attempts++ >= max_attempts)
      throw GraphError("sample_localization_pairs: drew only " +
                       std::to_string(out.size()) + " of " +
                       std::to_string(n) + " pairs within the bound of " +
                       std::to_string(max_attempts) +
                       " attempts (100*n); graph too sparse");
    const VertexId a = candidates[pick_a(rng)];
    int teach = graph.spatial_edge(a)->teach.index;
    if (opts.spatial_hops > 0)
      teach = std::clamp(teach + pick_hop(rng), 0, teach_len - 1);
    partners.clear();
    for (const auto& v : graph.localized_to(teach))
      if (v != a && allowed(v.run)) partners.push_back(v);
    if (partners.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick_b(0, partners.size() - 1);
    const VertexId b = partners[pick_b(rng)];
    out.push_back({a, b, *graph.relative_pose(a, b), PairKind::localization});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization

inline constexpr const char* kPoseGraphHeader =
    "PGRAPH v1 convention=a_rel_b angles=radians";

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos)
    throw GraphError(std::string("save: ") + what + " '" + s +
                     "' must be a non-empty token without whitespace");
}

}  // namespace detail

inline void save(const PoseGraph& g, std::ostream& os) {
  using detail::fmt_double;
  os << kPoseGraphHeader << "\n";
  for (int r : g.run_ids())
    for (const auto& kf : g.run(r).keyframes) {
      const std::string left = kf.image_left.empty() ? "-" : kf.image_left;
      const std::string right = kf.image_right.empty() ? "-" : kf.image_right;
      const std::string cond = kf.condition.empty() ? "-" : kf.condition;
      detail::check_token(left, "image path");
      detail::check_token(right, "image path");
      detail::check_token(cond, "condition");
      os << "V " << kf.id.run << " " << kf.id.index << " "
         << fmt_double(kf.timestamp) << " " << cond << " " << left << " "
         << right << "\n";
    }
  for (int r : g.run_ids()) {
    const auto& t = g.run(r).temporal;
    for (std::size_t i = 0; i < t.size(); ++i)
      os << "ET " << r << " " << i << " " << fmt_double(t[i].x) << " "
         << fmt_double(t[i].y) << " " << fmt_double(t[i].theta) << "\n";
  }
  for (const auto& [v, e] : g.spatial_edges())
    os << "ES " << v.run << " " << v.index << " " << e.teach.index << " "
       << fmt_double(e.xi.x) << " " << fmt_double(e.xi.y) << " "
       << fmt_double(e.xi.theta) << "\n";
}

inline void save(const PoseGraph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw GraphError("cannot open '" + path + "' for writing");
  save(g, os);
  if (!os) throw GraphError("write failed for '" + path + "'");
}

inline PoseGraph load_pose_graph(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> GraphError {
    return GraphError("pose graph line " + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(is, line)) throw GraphError("pose graph: empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("PGRAPH v1", 0) != 0)
    throw fail("bad header '" + line + "'");

  struct ET { int run, index; Pose2 xi; std::size_t line; };
  struct ES { VertexId repeat; int teach; Pose2 xi; std::size_t line; };
  std::map<int, std::map<int, Keyframe>> verts;
  std::vector<ET> ets;
  std::vector<ES> ess;

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "V") {
      Keyframe kf;
      if (!(ss >> kf.id.run >> kf.id.index >> kf.timestamp >> kf.condition >>
            kf.image_left >> kf.image_right))
        throw fail("malformed V record");
      if (kf.id.run < 0 || kf.id.index < 0) throw fail("negative vertex id");
      if (kf.image_left == "-") kf.image_left.clear();
      if (kf.image_right == "-") kf.image_right.clear();
      if (kf.condition == "-") kf.condition.clear();
      auto& run = verts[kf.id.run];
      if (run.count(kf.id.index))
        throw fail("duplicate vertex " + to_string(kf.id));
      run.emplace(kf.id.index, std::move(kf));
    } else if (tag == "ET") {
      ET e{};
      double x, y, t;
      if (!(ss >> e.run >> e.index >> x >> y >> t))
        throw fail("malformed ET record");
      e.xi = {x, y, t};
      e.line = lineno;
      ets.push_back(e);
    } else if (tag == "ES") {
      ES e{};
      double x, y, t;
      if (!(ss >> e.repeat.run >> e.repeat.index >> e.teach >> x >> y >> t))
        throw fail("malformed ES record");
      e.xi = {x, y, t};
      e.line = lineno;
      ess.push_back(e);
    } else {
      throw fail("unknown record tag '" + tag + "'");
    }
    std::string extra;
    if (ss >> extra) throw fail("trailing field '" + extra + "'");
  }

  std::map<int, std::vector<std::optional<Pose2>>> edges;
  for (const auto& [run, kfs] : verts)
    edges[run].assign(kfs.empty() ? 0 : kfs.size() - 1, std::nullopt);
  for (const auto& e : ets) {
    lineno = e.line;
    auto it = edges.find(e.run);
    if (it == edges.end() || e.index < 0 ||
        e.index >= static_cast<int>(it->second.size()))
      throw fail("temporal edge references missing vertex " +
                 to_string(VertexId{e.run, e.index + 1}));
    if (it->second[e.index]) throw fail("duplicate temporal edge");
    it->second[e.index] = e.xi;
  }

  PoseGraph g;
  for (auto& [run, kfs] : verts) {
    std::vector<Keyframe> list;
    int expect = 0;
    for (auto& [idx, kf] : kfs) {
      if (idx != expect++)
        throw GraphError("pose graph: run " + std::to_string(run) +
                         " is missing keyframe index " +
                         std::to_string(expect - 1));
      list.push_back(std::move(kf));
    }
    std::vector<Pose2> xis;
    for (std::size_t i = 0; i < edges[run].size(); ++i) {
      if (!edges[run][i])
        throw GraphError("pose graph: run " + std::to_string(run) +
                         " has no temporal edge from index " +
                         std::to_string(i));
      xis.push_back(*edges[run][i]);
    }
    g.add_run(run, std::move(list), std::move(xis));
  }
  for (const auto& e : ess) {
    lineno = e.line;
    if (!g.contains(e.repeat) || !g.contains({0, e.teach}))
      throw fail("spatial edge references missing vertex");
    try {
      g.add_spatial_edge(e.repeat, {0, e.teach}, e.xi);
    } catch (const GraphError& err) {
      throw fail(err.what());
    }
  }
  return g;
}

inline PoseGraph load_pose_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw GraphError("cannot open pose graph '" + path + "'");
  return load_pose_graph(is);
}

}  // namespace tnr

#endif  // TNR_POSE_GRAPH_HPP_
