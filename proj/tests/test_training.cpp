#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "tnr/training.hpp"

using namespace tnr;

namespace {

bool params_equal(const Params<float>& a, const Params<float>& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  return true;
}

// Input stacks whose content is a fixed textured base plus label-dependent
// perturbations, so the tiny network can fit the labels.
BatchFiller synthetic_filler() {
  return [](const LabeledPair& p, Tensor4<float>& t, int i) {
    for (int c = 0; c < t.c; ++c)
      for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x) {
          const double base = 0.5 + 0.25 * std::sin(1.3 * x + 0.7 * y + c);
          const double mod = p.xi.x * std::cos(0.9 * x + c) + p.xi.y * std::sin(1.1 * y + 2 * c) +
                             p.xi.theta * (x - y) / 8.0;
          t.at(i, c, y, x) = float(base + 0.2 * mod);
        }
  };
}

std::vector<LabeledPair> random_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({{1, int(i)}, {0, int(i)}, Pose2(u(rng), u(rng), 0.3 * u(rng)), PairKind::localization});
  return out;
}

PoseGraph straight_graph(int runs, int n) {
  PoseGraph g;
  for (int r = 0; r < runs; ++r) {
    std::vector<Keyframe> kf;
    for (int i = 0; i < n; ++i) kf.push_back({{r, i}, "-", "-", "c", double(i)});
    g.add_run(r, kf, std::vector<Pose2>(std::size_t(n - 1), Pose2(0.5, 0, 0)));
    if (r > 0)
      for (int i = 0; i < n; ++i) g.add_spatial_edge({r, i}, {0, i}, Pose2(0.01 * r, 0, 0));
  }
  return g;
}

void put_blank(ImageStore& store, const PoseGraph& g) {
  for (int r : g.run_ids())
    for (int i = 0; i < g.run_length(r); ++i)
      store.put({r, i}, {Image(store.width(), store.height()), Image(store.width(), store.height())});
}

}  // namespace

TEST(TrainConfig, ParsesAndValidates) {
  const auto t = TrainConfig::from_config(ConfigFile::from_string(
      "[train]\nbatch_size = 8\nlearning_rate = 0.01\npatience = 3\nw_theta = 5\n"));
  EXPECT_EQ(t.batch_size, 8);
  EXPECT_DOUBLE_EQ(t.learning_rate, 0.01);
  EXPECT_EQ(t.patience, 3);
  EXPECT_DOUBLE_EQ(t.weights.w_theta, 5.0);
  EXPECT_THROW(TrainConfig::from_config(ConfigFile::from_string("[train]\nbogus = 1\n")), ConfigError);
  EXPECT_THROW(TrainConfig::from_config(ConfigFile::from_string("[train]\nbatch_size = 0\n")), TrainingError);
  EXPECT_THROW(TrainConfig::from_config(ConfigFile::from_string("[train]\nval_fraction = 1\n")), TrainingError);
  EXPECT_THROW(TrainConfig::from_config(ConfigFile::from_string("[train]\nlearning_rate = 0\n")), TrainingError);
}

TEST(NetworkFromConfig, PresetsAndOverrides) {
  EXPECT_EQ(network_from_config(ConfigFile::from_string("")), NetworkConfig::desk());
  const auto c = network_from_config(ConfigFile::from_string("[model]\npreset = tiny\nfc_widths = 16, 4\n"));
  EXPECT_EQ(c.input_width, 8);
  EXPECT_EQ(c.fc_widths, (std::vector<int>{16, 4}));
  EXPECT_THROW(network_from_config(ConfigFile::from_string("[model]\npreset = huge\n")), ConfigError);
  EXPECT_THROW(network_from_config(ConfigFile::from_string("[model]\ndepth = 3\n")), ConfigError);
}

TEST(SplitDataset, NinetyTenDisjointDeterministic) {
  const auto pairs = random_pairs(1000, 3);
  std::mt19937_64 r1(7), r2(7);
  const Dataset a = split_dataset(pairs, 0.1, r1), b = split_dataset(pairs, 0.1, r2);
  EXPECT_EQ(a.val.size(), 100u);
  EXPECT_EQ(a.train.size(), 900u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  std::set<std::pair<VertexId, VertexId>> seen;
  for (const auto& p : a.train) seen.insert({p.a, p.b});
  for (const auto& p : a.val) EXPECT_EQ(seen.count({p.a, p.b}), 0u);
  EXPECT_EQ(seen.size() + a.val.size(), 1000u);
}

TEST(AssembleDataset, VoPairsOfSingleRun) {
  const PoseGraph g = straight_graph(1, 50);
  ImageStore store(g, "", 8, 8);
  put_blank(store, g);
  std::mt19937_64 rng(1);
  const Dataset d = assemble_dataset(g, PairKind::vo, 1000, rng, store);
  EXPECT_LE(d.train.size() + d.val.size(), 49u);
  EXPECT_EQ(d.train.size() + d.val.size(), 49u);
  for (const auto& p : d.train) {
    EXPECT_EQ(p.a.index, p.b.index + 1);
    EXPECT_EQ(p.kind, PairKind::vo);
  }
}

TEST(AssembleDataset, LocalizationPairsAreUnique) {
  const PoseGraph g = straight_graph(4, 20);
  ImageStore store(g, "", 8, 8);
  put_blank(store, g);
  std::mt19937_64 rng(2);
  // 60 repeat keyframes, each co-localized with one vertex on each of the
  // two other repeat runs: 120 distinct pairs exist.
  const Dataset d = assemble_dataset(g, PairKind::localization, 100, rng, store);
  std::set<std::pair<VertexId, VertexId>> seen;
  for (const auto* s : {&d.train, &d.val})
    for (const auto& p : *s) {
      EXPECT_TRUE(seen.insert({p.a, p.b}).second);
      EXPECT_NE(p.a.run, p.b.run);
    }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(AssembleDataset, MissingImageNamesVertex) {
  const PoseGraph g = straight_graph(1, 5);
  ImageStore store(g, "", 8, 8);
  store.put({0, 0}, {Image(8, 8), Image(8, 8)});
  std::mt19937_64 rng(1);
  try {
    assemble_dataset(g, PairKind::vo, 10, rng, store);
    FAIL();
  } catch (const ImageError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,"), std::string::npos) << e.what();
  }
}

TEST(AssembleDataset, WrongImageSizeIsReported) {
  const PoseGraph g = straight_graph(1, 3);
  ImageStore store(g, "", 8, 8);
  put_blank(store, g);
  store.put({0, 1}, {Image(4, 4), Image(8, 8)});
  std::mt19937_64 rng(1);
  try {
    assemble_dataset(g, PairKind::vo, 10, rng, store);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
  }
}

TEST(Samples, CsvRoundTrip) {
  auto pairs = random_pairs(20, 4);
  pairs[3].kind = PairKind::vo;
  std::stringstream ss;
  write_samples(pairs, ss);
  EXPECT_EQ(read_samples(ss), pairs);
  std::istringstream bad("kind,a_run,a_index,b_run,b_index,x,y,theta\nvo,1,2,1,1,0,0\n");
  try {
    read_samples(bad, "s.csv");
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("s.csv:2"), std::string::npos) << e.what();
  }
}

TEST(Adam, UpdatesEveryTensor) {
  const auto cfg = NetworkConfig::tiny();
  auto st = init<float>(cfg, 1);
  const auto before = st.params;
  Regressor<float> net(cfg);
  Tensor4<float> t(4, 12, 8, 8);
  const auto pairs = random_pairs(4, 1);
  auto fill = synthetic_filler();
  for (int i = 0; i < 4; ++i) fill(pairs[std::size_t(i)], t, i);
  Mat<float> grad;
  batch_loss(targets_of(pairs, 0, 4), net.forward(st.params, t), LossWeights(), &grad);
  Params<float> g = st.params.zeros_like();
  net.backward(st.params, grad, g);
  TrainConfig tc;
  Adam adam(st.params, tc);
  adam.update(st.params, g, 1);
  for (std::size_t l = 0; l < st.params.weights.size(); ++l) {
    EXPECT_NE(st.params.weights[l], before.weights[l]) << "weights " << l;
    EXPECT_NE(st.params.biases[l], before.biases[l]) << "biases " << l;
    // The first bias-corrected step moves each parameter by at most lr.
    EXPECT_LE((st.params.weights[l] - before.weights[l]).cwiseAbs().maxCoeff(), 1.001e-4);
  }
}

TEST(Train, StubbedValidationEarlyStopReturnsBest) {
  Dataset d{random_pairs(16, 1), random_pairs(4, 2)};
  TrainConfig tc;
  tc.batch_size = 8;
  tc.patience = 1;
  tc.max_epochs = 10;
  const std::vector<double> vals = {1.0, 0.5, 0.7, 0.1};
  TrainHooks hooks;
  hooks.val_loss = [&](const RegressorState<float>&, int epoch) { return vals[std::size_t(epoch - 1)]; };
  Params<float> at_best;
  hooks.on_epoch = [&](const RegressorState<float>& s, const EpochRecord&, bool improved) {
    if (improved) at_best = s.params;
  };
  auto [best, rep] = train(init<float>(NetworkConfig::tiny(), 1), d, synthetic_filler(), tc, hooks);
  EXPECT_TRUE(rep.early_stopped);
  EXPECT_EQ(rep.stopped_epoch, 3);
  EXPECT_EQ(rep.best_epoch, 2);
  EXPECT_EQ(rep.best_val_loss, 0.5);
  EXPECT_EQ(best.step, 4);
  EXPECT_TRUE(params_equal(best.params, at_best));
}

TEST(Train, LossDecreasesOnLearnableTask) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    const Dataset d = split_dataset(random_pairs(320, seed), 0.1, rng);
    TrainConfig tc;
    tc.batch_size = 16;
    tc.learning_rate = 3e-3;
    tc.max_epochs = 5;
    tc.patience = 5;
    tc.seed = seed;
    auto [best, rep] = train(init<float>(NetworkConfig::tiny(), seed), d, synthetic_filler(), tc);
    ASSERT_EQ(rep.epochs.size(), 5u);
    EXPECT_LT(rep.epochs.back().train_loss, rep.epochs.front().train_loss) << "seed " << seed;
    EXPECT_LT(rep.best_val_loss, rep.epochs.front().val_loss + 1e-12) << "seed " << seed;
  }
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  auto pairs = random_pairs(16, 1);
  pairs[5].xi.x = std::nan("");
  Dataset d{pairs, random_pairs(4, 2)};
  TrainConfig tc;
  tc.batch_size = 4;
  try {
    train(init<float>(NetworkConfig::tiny(), 1), d, synthetic_filler(), tc);
    FAIL();
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Train, ReproducibleGivenSeeds) {
  std::mt19937_64 rng(5);
  const Dataset d = split_dataset(random_pairs(64, 5), 0.25, rng);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 3;
  tc.learning_rate = 1e-3;
  tc.seed = 11;
  auto a = train(init<float>(NetworkConfig::tiny(), 2), d, synthetic_filler(), tc);
  auto b = train(init<float>(NetworkConfig::tiny(), 2), d, synthetic_filler(), tc);
  EXPECT_TRUE(params_equal(a.first.params, b.first.params));
  ASSERT_EQ(a.second.epochs.size(), b.second.epochs.size());
  for (std::size_t i = 0; i < a.second.epochs.size(); ++i)
    EXPECT_EQ(a.second.epochs[i].train_loss, b.second.epochs[i].train_loss);
}

TEST(Train, RejectsEmptySets) {
  Dataset d{random_pairs(4, 1), {}};
  EXPECT_THROW(train(init<float>(NetworkConfig::tiny(), 1), d, synthetic_filler(), TrainConfig{}), TrainingError);
}

TEST(TrainReport, CsvHasOneRowPerEpoch) {
  TrainReport r;
  r.epochs = {{1, 0.5, 0.6, 1.0}, {2, 0.4, 0.5, 1.0}};
  std::ostringstream os;
  r.write_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("epoch,train_loss,val_loss,seconds\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
