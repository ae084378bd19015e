// Dataset assembly from sampled pairs, Adam optimisation with the weighted
// quadratic pose loss, and early stopping on validation loss with
// best-checkpoint return.

#ifndef TNR_TRAINING_HPP_
#define TNR_TRAINING_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tnr/config.hpp"
#include "tnr/dataset.hpp"
#include "tnr/model.hpp"
#include "tnr/pose_graph.hpp"

namespace tnr {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  LossWeights weights;
  /// Stop as soon as an epoch's mean train loss falls below this (0 = off).
  double stop_train_loss = 0.0;

  void validate() const {
    if (batch_size < 1) throw TrainingError("batch_size must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
      throw TrainingError("val_fraction must be in (0,1)");
    if (patience < 1) throw TrainingError("patience must be >= 1");
    if (max_epochs < 1) throw TrainingError("max_epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw TrainingError("learning_rate must be > 0");
  }

  static TrainConfig from_config(const ConfigFile& cfg) {
    cfg.check_keys("train", {"batch_size", "learning_rate", "adam_beta1",
                             "adam_beta2", "adam_epsilon", "max_epochs", "patience",
                             "seed", "val_fraction", "w_x", "w_y", "w_theta",
                             "stop_train_loss"});
    TrainConfig t;
    t.batch_size = int(cfg.get_int("train", "batch_size", t.batch_size));
    t.learning_rate = cfg.get_double("train", "learning_rate", t.learning_rate);
    t.adam_beta1 = cfg.get_double("train", "adam_beta1", t.adam_beta1);
    t.adam_beta2 = cfg.get_double("train", "adam_beta2", t.adam_beta2);
    t.adam_epsilon = cfg.get_double("train", "adam_epsilon", t.adam_epsilon);
    t.max_epochs = int(cfg.get_int("train", "max_epochs", t.max_epochs));
    t.patience = int(cfg.get_int("train", "patience", t.patience));
    t.seed = std::uint64_t(cfg.get_int("train", "seed", (long long)t.seed));
    t.val_fraction = cfg.get_double("train", "val_fraction", t.val_fraction);
    t.stop_train_loss = cfg.get_double("train", "stop_train_loss", 0.0);
    t.weights = LossWeights(cfg.get_double("train", "w_x", 1.0),
                            cfg.get_double("train", "w_y", 1.0),
                            cfg.get_double("train", "w_theta", 10.0));
    t.validate();
    return t;
  }
};

/// Model architecture from a `[model]` section: a preset (desk, tiny, full)
/// with optional overrides.
inline NetworkConfig network_from_config(const ConfigFile& cfg) {
  cfg.check_keys("model", {"preset", "fc_widths", "spp_bins", "input_width", "input_height"});
  const std::string preset = cfg.get_string("model", "preset", "desk");
  NetworkConfig c;
  if (preset == "desk")
    c = NetworkConfig::desk();
  else if (preset == "tiny")
    c = NetworkConfig::tiny();
  else if (preset == "full")
    c = NetworkConfig::full();
  else
    throw ConfigError("[model] preset: unknown '" + preset + "'");
  c.fc_widths = cfg.get_ints("model", "fc_widths", c.fc_widths);
  c.spp_bins = cfg.get_ints("model", "spp_bins", c.spp_bins);
  c.input_width = int(cfg.get_int("model", "input_width", c.input_width));
  c.input_height = int(cfg.get_int("model", "input_height", c.input_height));
  try {
    c.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("[model] ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Sample manifests: CSV `kind,a_run,a_index,b_run,b_index,x,y,theta`.

inline void write_samples(const std::vector<LabeledPair>& pairs, std::ostream& os) {
  os << "kind,a_run,a_index,b_run,b_index,x,y,theta\n";
  char buf[192];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%.17g,%.17g,%.17g\n", to_string(p.kind),
                  p.a.run, p.a.index, p.b.run, p.b.index, p.xi.x, p.xi.y, p.xi.theta);
    os << buf;
  }
}

inline std::vector<LabeledPair> read_samples(std::istream& is, const std::string& origin = "samples") {
  std::vector<LabeledPair> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line.rfind("kind,", 0) != 0) throw TrainingError(origin + ":1: missing header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    auto bad = [&](const std::string& why) {
      return TrainingError(origin + ":" + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != 8) throw bad("expected 8 fields");
    LabeledPair p;
    try {
      p.kind = parse_pair_kind(f[0]);
      p.a = {std::stoi(f[1]), std::stoi(f[2])};
      p.b = {std::stoi(f[3]), std::stoi(f[4])};
      p.xi = Pose2(std::stod(f[5]), std::stod(f[6]), std::stod(f[7]));
    } catch (const std::exception& e) {
      throw bad(e.what());
    }
    out.push_back(p);
  }
  return out;
}

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool early_stopped = false;

  void write_csv(std::ostream& os) const {
    os << "epoch,train_loss,val_loss,seconds\n";
    for (const auto& e : epochs)
      os << e.epoch << "," << e.train_loss << "," << e.val_loss << "," << e.seconds << "\n";
  }
};

struct Dataset {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> val;
};

/// Shuffles and splits into disjoint train/val sets; val gets
/// round(n * val_fraction) samples.
template <typename Rng>
Dataset split_dataset(std::vector<LabeledPair> pairs, double val_fraction, Rng& rng) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw TrainingError("val_fraction must be in (0,1)");
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto nval = std::size_t(std::lround(double(pairs.size()) * val_fraction));
  Dataset d;
  d.val.assign(pairs.begin(), pairs.begin() + std::ptrdiff_t(nval));
  d.train.assign(pairs.begin() + std::ptrdiff_t(nval), pairs.end());
  return d;
}

struct AssembleOptions {
  double val_fraction = 0.1;
  /// Restrict sampling to these runs (empty = all repeat runs, plus the
  /// teach run for VO).
  std::set<int> runs;
  int spatial_hops = 0;
};

/// Samples up to `n` unique pairs of the requested kind, splits them, and
/// checks that every referenced image resolves at the network input size.
template <typename Rng>
Dataset assemble_dataset(const PoseGraph& graph, PairKind kind, std::size_t n,
                         Rng& rng, ImageStore& store, const AssembleOptions& opts = {}) {
  std::vector<LabeledPair> pairs;
  if (kind == PairKind::vo) {
    for (int r : graph.run_ids()) {
      if (!opts.runs.empty() && !opts.runs.count(r)) continue;
      auto p = sample_vo_pairs(graph, r);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    if (pairs.size() > n) pairs.resize(n);
  } else {
    LocalizationSampling ls;
    ls.spatial_hops = opts.spatial_hops;
    if (!opts.runs.empty()) ls.runs = opts.runs;
    std::set<std::pair<VertexId, VertexId>> seen;
    for (int round = 0; round < 20 && pairs.size() < n; ++round) {
      for (const auto& p : sample_localization_pairs(graph, n, rng, ls))
        if (pairs.size() < n && seen.insert({p.a, p.b}).second) pairs.push_back(p);
    }
  }
  for (const auto& p : pairs)
    for (const auto& v : {p.a, p.b}) {
      const auto& img = store.get(v);
      if (img.left.width != store.width() || img.left.height != store.height() ||
          img.right.width != store.width() || img.right.height != store.height())
        throw TrainingError("vertex " + to_string(v) + ": image size mismatch");
    }
  return split_dataset(std::move(pairs), opts.val_fraction, rng);
}

// ---------------------------------------------------------------------------

/// Fills slot `i` of a batch with the input stack for a pair.
using BatchFiller = std::function<void(const LabeledPair&, Tensor4<float>&, int)>;

inline BatchFiller image_filler(ImageStore& store) {
  return [&store](const LabeledPair& p, Tensor4<float>& t, int i) {
    store.fill(t, i, p.a, p.b);
  };
}

class Adam {
 public:
  Adam(const Params<float>& like, const TrainConfig& cfg)
      : m_(like.zeros_like()), v_(like.zeros_like()), cfg_(cfg) {}

  /// One update; `step` is the 1-based global step used for bias correction.
  void update(Params<float>& p, const Params<float>& g, std::int64_t step) {
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const float c1 = float(1.0 - std::pow(b1, double(step)));
    const float c2 = float(1.0 - std::pow(b2, double(step)));
    const float lr = float(cfg_.learning_rate), eps = float(cfg_.adam_epsilon);
    auto apply = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = float(b1) * m + float(1.0 - b1) * grad;
      v = float(b2) * v + float(1.0 - b2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      apply(p.weights[l], g.weights[l], m_.weights[l], v_.weights[l]);
      apply(p.biases[l], g.biases[l], m_.biases[l], v_.biases[l]);
    }
  }

 private:
  Params<float> m_, v_;
  TrainConfig cfg_;
};

inline Mat<float> targets_of(const std::vector<LabeledPair>& pairs, std::size_t begin,
                             std::size_t end) {
  Mat<float> t(3, Eigen::Index(end - begin));
  for (std::size_t i = begin; i < end; ++i) {
    t(0, Eigen::Index(i - begin)) = float(pairs[i].xi.x);
    t(1, Eigen::Index(i - begin)) = float(pairs[i].xi.y);
    t(2, Eigen::Index(i - begin)) = float(pairs[i].xi.theta);
  }
  return t;
}

/// Mean loss of `state` over `pairs` (inference only).
inline double evaluate_loss(const RegressorState<float>& state,
                            const std::vector<LabeledPair>& pairs,
                            const BatchFiller& fill, const LossWeights& w,
                            int batch_size = 64) {
  if (pairs.empty()) throw TrainingError("evaluate_loss: empty set");
  Regressor<float> net(state.config);
  const auto& c = state.config;
  double total = 0.0;
  for (std::size_t b = 0; b < pairs.size(); b += std::size_t(batch_size)) {
    const std::size_t e = std::min(pairs.size(), b + std::size_t(batch_size));
    Tensor4<float> t(int(e - b), c.input_channels, c.input_height, c.input_width);
    for (std::size_t i = b; i < e; ++i) fill(pairs[i], t, int(i - b));
    const Mat<float> pred = net.forward(state.params, t);
    total += batch_loss(targets_of(pairs, b, e), pred, w) * double(e - b);
  }
  return total / double(pairs.size());
}

struct TrainHooks {
  /// Replaces the validation pass (early-stopping tests).
  std::function<double(const RegressorState<float>&, int epoch)> val_loss;
  /// Called after every epoch; `improved` marks a new best validation loss.
  std::function<void(const RegressorState<float>&, const EpochRecord&, bool improved)> on_epoch;
};

/// Runs Adam over shuffled minibatches, evaluates on the validation set each
/// epoch, stops after `patience` epochs without improvement (or at
/// max_epochs, or when the train loss target is met) and returns the
/// best-validation state.
inline std::pair<RegressorState<float>, TrainReport> train(
    RegressorState<float> state, const Dataset& data, const BatchFiller& fill,
    const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (data.train.empty() || data.val.empty())
    throw TrainingError("train: train and validation sets must be non-empty");
  const auto& c = state.config;
  Regressor<float> net(c);
  Adam adam(state.params, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  RegressorState<float> best = state;
  int stale = 0;
  std::vector<LabeledPair> batch_pairs;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    int batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(cfg.batch_size), ++batch_index) {
      const std::size_t e = std::min(order.size(), b + std::size_t(cfg.batch_size));
      batch_pairs.clear();
      for (std::size_t i = b; i < e; ++i) batch_pairs.push_back(data.train[order[i]]);
      Tensor4<float> t(int(e - b), c.input_channels, c.input_height, c.input_width);
      for (std::size_t i = 0; i < batch_pairs.size(); ++i) fill(batch_pairs[i], t, int(i));
      const Mat<float> pred = net.forward(state.params, t);
      Mat<float> grad;
      const double l = batch_loss(targets_of(batch_pairs, 0, batch_pairs.size()), pred,
                                  cfg.weights, &grad);
      if (!std::isfinite(l))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
      Params<float> g = state.params.zeros_like();
      net.backward(state.params, grad, g);
      ++state.step;
      adam.update(state.params, g, state.step);
      if (!state.params.all_finite())
        throw TrainingError("non-finite weights after epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
      train_total += l * double(e - b);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total / double(order.size());
    rec.val_loss = hooks.val_loss ? hooks.val_loss(state, epoch)
                                  : evaluate_loss(state, data.val, fill, cfg.weights);
    if (!std::isfinite(rec.val_loss))
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    report.stopped_epoch = epoch;

    const bool improved = rec.val_loss < report.best_val_loss;
    if (improved) {
      report.best_val_loss = rec.val_loss;
      report.best_epoch = epoch;
      best = state;
      stale = 0;
    } else {
      ++stale;
    }
    if (hooks.on_epoch) hooks.on_epoch(state, rec, improved);
    if (cfg.stop_train_loss > 0.0 && rec.train_loss < cfg.stop_train_loss) break;
    if (stale >= cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

}  // namespace tnr

#endif  // TNR_TRAINING_HPP_
