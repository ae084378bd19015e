// tnr: generate synthetic teach/repeat datasets, sample training pairs,
// train the relative pose regressor and evaluate it.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tnr/config.hpp"
#include "tnr/dataset.hpp"
#include "tnr/evaluation.hpp"
#include "tnr/model.hpp"
#include "tnr/pose_graph.hpp"
#include "tnr/training.hpp"

namespace fs = std::filesystem;
using namespace tnr;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kSections = {"world", "camera", "teach", "repeat", "dataset",
                                         "model", "train", "eval"};

ConfigFile load_config(const std::string& path) {
  if (path.empty()) return ConfigFile{};
  ConfigFile cfg = ConfigFile::load(path);
  for (const auto& s : cfg.section_names()) {
    if (s.empty() || kSections.count(s) || s.rfind("condition.", 0) == 0) continue;
    throw ConfigError("unknown config section [" + s + "]");
  }
  return cfg;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& item : detail::split(s, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

/// Provenance record written into every output directory.
class RunManifest {
 public:
  RunManifest(std::string command, std::string config_path, std::string out)
      : command_(std::move(command)), config_(std::move(config_path)), out_(std::move(out)) {}

  template <typename V>
  void set(const std::string& key, const V& v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    values_.emplace_back(key, os.str());
  }

  void write() const {
    fs::create_directories(out_);
    std::ofstream f(fs::path(out_) / "run_manifest.txt");
    f << "command = " << command_ << "\n";
    f << "config = " << (config_.empty() ? "-" : config_) << "\n";
    f << "out = " << out_ << "\n";
    for (const auto& [k, v] : values_) f << k << " = " << v << "\n";
    if (!config_.empty()) {
      f << "\n# config file contents\n";
      std::ifstream in(config_);
      std::string line;
      while (std::getline(in, line)) f << "# " << line << "\n";
    }
  }

 private:
  std::string command_, config_, out_;
  std::vector<std::pair<std::string, std::string>> values_;
};

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string base_dir_of(const std::string& graph_path) {
  return fs::path(graph_path).parent_path().string();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config, out, conditions;
  long long seed = -1;
  int random_repeats = -1;
};

int cmd_generate(const GenerateArgs& a) {
  const ConfigFile cfg = load_config(a.config);
  SynthDatasetConfig dc = SynthDatasetConfig::from_config(cfg);
  if (a.seed >= 0) dc.seed = std::uint64_t(a.seed);
  if (a.random_repeats >= 0) dc.random_repeats = a.random_repeats;
  if (!a.conditions.empty()) {
    dc.named.clear();
    for (const auto& name : detail::split(a.conditions, ','))
      dc.named.push_back({name, SynthDatasetConfig::resolve_condition(cfg, name)});
  }
  if (dc.named.empty() && dc.random_repeats == 0)
    throw UsageError("no repeat runs requested (set [dataset] conditions or random_repeats)");

  const auto t0 = std::chrono::steady_clock::now();
  const GeneratedDataset ds = generate_dataset(dc, a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunManifest m("generate", a.config, a.out);
  m.set("seed", dc.seed);
  m.set("teach_condition", dc.teach_condition);
  std::string names;
  for (const auto& n : dc.named) names += (names.empty() ? "" : ",") + n.name;
  m.set("conditions", names.empty() ? "-" : names);
  m.set("random_repeats", dc.random_repeats);
  m.set("named_runs", join(ds.named_runs));
  m.set("random_runs", join(ds.random_runs));
  m.set("label_noise_sigma", dc.label_noise_sigma);
  m.set("graph", ds.graph_path);
  m.write();

  std::cout << "runs: " << ds.graph.run_ids().size() << " (1 teach + "
            << ds.graph.run_ids().size() - 1 << " repeat)\n";
  for (int r : ds.graph.run_ids())
    std::cout << "  run " << r << " [" << ds.graph.run_condition(r) << "]: "
              << ds.graph.run_length(r) << " keyframes\n";
  std::cout << "keyframes: " << ds.graph.num_keyframes()
            << ", temporal edges: " << ds.graph.num_temporal_edges()
            << ", spatial edges: " << ds.graph.spatial_edges().size() << "\n";
  std::cout << "graph: " << ds.graph_path << " (" << secs << " s)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string graph, out, kind = "loc", runs;
  long long seed = 0;
  long long n = 1000;
  int spatial_hops = 0;
};

int cmd_sample(const SampleArgs& a) {
  const PoseGraph g = load_pose_graph(a.graph);
  if (a.n < 1) throw UsageError("--n must be >= 1");
  std::set<int> runs;
  if (!a.runs.empty())
    for (int r : parse_int_list(a.runs, "--runs")) runs.insert(r);
  const PairKind kind = parse_pair_kind(a.kind);
  std::mt19937_64 rng(std::uint64_t(a.seed));
  std::vector<LabeledPair> pairs;
  if (kind == PairKind::vo) {
    for (int r : g.run_ids()) {
      if (!runs.empty() && !runs.count(r)) continue;
      auto p = sample_vo_pairs(g, r);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    if (pairs.size() > std::size_t(a.n)) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      pairs.resize(std::size_t(a.n));
    }
  } else {
    LocalizationSampling ls;
    ls.spatial_hops = a.spatial_hops;
    if (!runs.empty()) ls.runs = runs;
    pairs = sample_localization_pairs(g, std::size_t(a.n), rng, ls);
  }
  fs::create_directories(a.out);
  const std::string path = (fs::path(a.out) / "samples.csv").string();
  {
    std::ofstream f(path);
    write_samples(pairs, f);
  }
  RunManifest m("sample", "", a.out);
  m.set("graph", a.graph);
  m.set("kind", to_string(kind));
  m.set("n", a.n);
  m.set("seed", a.seed);
  m.set("runs", a.runs.empty() ? "all" : a.runs);
  m.set("spatial_hops", a.spatial_hops);
  m.set("written", pairs.size());
  m.write();
  std::cout << "wrote " << pairs.size() << " " << to_string(kind) << " samples to " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, out, samples, graph, resume;
  long long seed = -1;
};

int cmd_train(const TrainArgs& a) {
  const ConfigFile cfg = load_config(a.config);
  TrainConfig tc = TrainConfig::from_config(cfg);
  if (a.seed >= 0) tc.seed = std::uint64_t(a.seed);
  NetworkConfig nc = network_from_config(cfg);

  const PoseGraph g = load_pose_graph(a.graph);
  std::ifstream sf(a.samples);
  if (!sf) throw TrainingError("cannot open samples file '" + a.samples + "'");
  std::vector<LabeledPair> pairs = read_samples(sf, a.samples);
  if (pairs.size() < 2) throw TrainingError("need at least 2 samples");

  RegressorState<float> state;
  if (!a.resume.empty()) {
    state = load_checkpoint(a.resume);
    nc = state.config;
    std::cout << "resuming from " << a.resume << " at step " << state.step << "\n";
  } else {
    state = init<float>(nc, tc.seed);
  }

  ImageStore store(g, base_dir_of(a.graph), nc.input_width, nc.input_height);
  for (const auto& p : pairs) {
    store.get(p.a);
    store.get(p.b);
  }
  std::mt19937_64 rng(tc.seed);
  const Dataset data = split_dataset(pairs, tc.val_fraction, rng);

  fs::create_directories(a.out);
  const std::string best_path = (fs::path(a.out) / "best.ckpt").string();
  TrainHooks hooks;
  hooks.on_epoch = [&](const RegressorState<float>& st, const EpochRecord& r, bool improved) {
    std::printf("epoch %3d  train %.6g  val %.6g  %.1fs%s\n", r.epoch, r.train_loss, r.val_loss,
                r.seconds, improved ? "  *" : "");
    std::fflush(stdout);
    if (improved) save_checkpoint(st, best_path);
  };
  auto [best, report] = train(state, data, image_filler(store), tc, hooks);
  save_checkpoint(best, best_path);
  {
    std::ofstream f(fs::path(a.out) / "train_report.csv");
    report.write_csv(f);
  }
  RunManifest m("train", a.config, a.out);
  m.set("graph", a.graph);
  m.set("samples", a.samples);
  m.set("resume", a.resume.empty() ? "-" : a.resume);
  m.set("seed", tc.seed);
  m.set("batch_size", tc.batch_size);
  m.set("learning_rate", tc.learning_rate);
  m.set("max_epochs", tc.max_epochs);
  m.set("patience", tc.patience);
  m.set("val_fraction", tc.val_fraction);
  m.set("train_samples", data.train.size());
  m.set("val_samples", data.val.size());
  m.set("stopped_epoch", report.stopped_epoch);
  m.set("best_epoch", report.best_epoch);
  m.set("best_val_loss", report.best_val_loss);
  m.set("final_step", best.step);
  m.write();
  std::cout << "best checkpoint: " << best_path << " (epoch " << report.best_epoch
            << ", val loss " << report.best_val_loss << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config, out, graph, vo, loc, runs, weights;
  int window = -1;
  bool stub_oracle = false;
  long long seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const ConfigFile cfg = load_config(a.config);
  cfg.check_keys("eval", {"window", "w_vo", "w_loc", "runs"});
  EvalOptions opts;
  opts.window = int(cfg.get_int("eval", "window", 5));
  opts.weights.vo = cfg.get_double("eval", "w_vo", 0.3);
  opts.weights.loc = cfg.get_double("eval", "w_loc", 0.7);
  if (a.window >= 0) opts.window = a.window;
  if (!a.weights.empty()) {
    const auto w = detail::split(a.weights, ',');
    if (w.size() != 2) throw UsageError("--weights expects W_VO,W_LOC");
    try {
      opts.weights.vo = std::stod(w[0]);
      opts.weights.loc = std::stod(w[1]);
    } catch (const std::exception&) {
      throw UsageError("--weights: not numbers: " + a.weights);
    }
  }
  if (opts.window < 1) throw UsageError("--window must be >= 1");
  try {
    opts.weights.validate();
  } catch (const EvalError& e) {
    throw UsageError(e.what());
  }

  const PoseGraph g = load_pose_graph(a.graph);
  std::vector<int> runs;
  if (!a.runs.empty())
    runs = parse_int_list(a.runs, "--runs");
  else if (cfg.has("eval", "runs"))
    runs = cfg.get_ints("eval", "runs", {});
  else
    for (int r : g.run_ids())
      if (r != 0) runs.push_back(r);
  for (int r : runs)
    if (!g.has_run(r)) throw UsageError("--runs: graph has no run " + std::to_string(r));
  if (runs.size() < 2) throw UsageError("need at least 2 runs to evaluate");

  std::shared_ptr<Predictor> vo, loc;
  std::unique_ptr<ImageStore> store;
  if (a.stub_oracle) {
    vo = loc = std::make_shared<OraclePredictor>(g);
  } else {
    if (a.vo.empty() || a.loc.empty())
      throw UsageError("--vo and --loc checkpoints are required unless --stub-oracle is given");
    RegressorState<float> vs = load_checkpoint(a.vo);
    RegressorState<float> ls = load_checkpoint(a.loc);
    if (vs.config.input_width != ls.config.input_width || vs.config.input_height != ls.config.input_height)
      throw EvalError("VO and localization checkpoints expect different input sizes");
    store = std::make_unique<ImageStore>(g, base_dir_of(a.graph), vs.config.input_width,
                                         vs.config.input_height);
    vo = std::make_shared<ModelPredictor>(std::move(vs), *store);
    loc = std::make_shared<ModelPredictor>(std::move(ls), *store);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const EvalReport rep = evaluate(g, *vo, *loc, runs, opts);
  const auto files = write_report(rep, a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunManifest m("evaluate", a.config, a.out);
  m.set("graph", a.graph);
  m.set("vo", a.stub_oracle ? "oracle" : a.vo);
  m.set("loc", a.stub_oracle ? "oracle" : a.loc);
  m.set("runs", join(runs));
  m.set("window", opts.window);
  m.set("w_vo", opts.weights.vo);
  m.set("w_loc", opts.weights.loc);
  m.set("seed", a.seed);
  m.write();

  std::printf("%-8s %-8s %10s %10s %12s  %s\n", "repeat", "teach", "rmse_x_m", "rmse_y_m",
              "rmse_th_deg", "kind");
  for (const auto& c : rep.rmse)
    std::printf("%-8d %-8d %10.4f %10.4f %12.3f  %s\n", c.repeat_run, c.teach_run, c.rmse.x,
                c.rmse.y, c.rmse.theta_deg, to_string(c.kind));
  for (const auto& tr : rep.fusion) {
    double worst = 0.0;
    for (const auto& e : fusion_errors(tr)) worst = std::max(worst, std::abs(e.y));
    std::printf("path_follow %d->%d: %zu steps, max |lateral error| %.4f m%s\n", tr.repeat_run,
                tr.teach_run, tr.steps.size(), worst, tr.truncated ? " (truncated)" : "");
  }
  std::cout << "wrote " << files.size() << " files to " << a.out << " (" << secs << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teach-and-repeat relative pose regression toolkit"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Render a synthetic teach run plus repeats and write the pose graph");
  gen->add_option("--config", ga.config, "Config file")->check(CLI::ExistingFile);
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--seed", ga.seed, "Dataset seed (overrides [dataset] seed)");
  gen->add_option("--conditions", ga.conditions, "Comma-separated named conditions, one repeat each");
  gen->add_option("--random-repeats", ga.random_repeats, "Number of random-condition repeats");

  SampleArgs sa;
  auto* smp = app.add_subcommand("sample", "Sample labelled pairs from a pose graph");
  smp->add_option("--graph", sa.graph, "Pose graph file")->required()->check(CLI::ExistingFile);
  smp->add_option("--out", sa.out, "Output directory")->required();
  smp->add_option("--kind", sa.kind, "vo or loc")->check(CLI::IsMember({"vo", "loc", "localization"}));
  smp->add_option("--n", sa.n, "Number of samples (VO: cap)");
  smp->add_option("--seed", sa.seed, "Sampling seed");
  smp->add_option("--runs", sa.runs, "Comma-separated runs to sample from");
  smp->add_option("--spatial-hops", sa.spatial_hops, "Teach keyframes to walk for localization pairs");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train the regressor on a sample manifest");
  trn->add_option("--config", ta.config, "Config file")->check(CLI::ExistingFile);
  trn->add_option("--out", ta.out, "Output directory")->required();
  trn->add_option("--samples", ta.samples, "Sample manifest (samples.csv)")->required()->check(CLI::ExistingFile);
  trn->add_option("--graph", ta.graph, "Pose graph file")->required()->check(CLI::ExistingFile);
  trn->add_option("--seed", ta.seed, "Training seed (overrides [train] seed)");
  trn->add_option("--resume", ta.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);

  EvaluateArgs ea;
  auto* evl = app.add_subcommand("evaluate", "RMSE matrix, VO tracks, error CDFs and path following");
  evl->add_option("--config", ea.config, "Config file")->check(CLI::ExistingFile);
  evl->add_option("--out", ea.out, "Output directory")->required();
  evl->add_option("--graph", ea.graph, "Pose graph file")->required()->check(CLI::ExistingFile);
  evl->add_option("--vo", ea.vo, "VO checkpoint");
  evl->add_option("--loc", ea.loc, "Localization checkpoint");
  evl->add_option("--runs", ea.runs, "Comma-separated runs forming the matrix");
  evl->add_option("--window", ea.window, "Teach keyframes considered ahead when following");
  evl->add_option("--weights", ea.weights, "Fusion weights W_VO,W_LOC");
  evl->add_flag("--stub-oracle", ea.stub_oracle, "Replace both models with ground truth");
  evl->add_option("--seed", ea.seed, "Recorded in the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(ga);
    if (*smp) return cmd_sample(sa);
    if (*trn) return cmd_train(ta);
    if (*evl) return cmd_evaluate(ea);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
