#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tnr/evaluation.hpp"
#include "tnr/synth_world.hpp"

using namespace tnr;

namespace {

std::vector<Pose2> line_poses(int n, double spacing, double lateral = 0.0) {
  std::vector<Pose2> out;
  for (int i = 0; i < n; ++i) out.emplace_back(i * spacing, lateral, 0.0);
  return out;
}

// Teach plus three repeats on a gently curving path.
PoseGraph curved_graph() {
  std::vector<Pose2> teach;
  Pose2 p;
  for (int i = 0; i < 40; ++i) {
    teach.push_back(p);
    p = compose(p, Pose2(0.5, 0.0, 0.03));
  }
  std::vector<std::vector<Pose2>> reps;
  for (int r = 1; r <= 3; ++r) {
    std::vector<Pose2> rep;
    for (const auto& t : teach) rep.push_back(compose(t, Pose2(0.02 * r, 0.05 * r, 0.01 * r)));
    reps.push_back(rep);
  }
  GraphBuildOptions o;
  o.conditions = {"teach", "day-green", "night-green", "day-snow"};
  return build_graph(teach, reps, o);
}

void expect_pose_near(const Pose2& a, const Pose2& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(wrap_angle(a.theta - b.theta), 0.0, tol);
}

}  // namespace

TEST(Rmse, OracleIsZeroEverywhere) {
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  for (const auto& c : rmse_matrix(g, oracle, oracle, {1, 2, 3})) {
    EXPECT_LT(c.rmse.x, 1e-9);
    EXPECT_LT(c.rmse.y, 1e-9);
    EXPECT_LT(c.rmse.theta_deg, 1e-7);
    EXPECT_GT(c.rmse.count, 0u);
    EXPECT_EQ(c.kind, c.repeat_run == c.teach_run ? PairKind::vo : PairKind::localization);
  }
}

TEST(Rmse, NoisyPredictorConvergesToSigma) {
  const PoseGraph g = curved_graph();
  auto oracle = std::make_shared<OraclePredictor>(g);
  NoisyPredictor noisy(oracle, {0.05, 0.02, 0.01}, 3);
  std::vector<VertexPair> pairs;
  for (int k = 0; k < 1000; ++k) {
    const int i = k % 39;
    pairs.push_back({{1 + k % 3, i + 1}, {1 + k % 3, i}});
  }
  const Rmse r = rmse_of(run_pairs(g, noisy, pairs));
  EXPECT_EQ(r.count, 1000u);
  EXPECT_NEAR(r.x, 0.05, 0.005);
  EXPECT_NEAR(r.y, 0.02, 0.002);
  EXPECT_NEAR(r.theta_deg, rad_to_deg(0.01), rad_to_deg(0.001));
}

TEST(Rmse, BiasShowsUpExactly) {
  const PoseGraph g = curved_graph();
  BiasedPredictor biased(std::make_shared<OraclePredictor>(g), Pose2(0.1, -0.2, 0.0));
  const Rmse r = rmse_of(vo_standalone(g, biased, 2));
  EXPECT_NEAR(r.x, 0.1, 1e-12);
  EXPECT_NEAR(r.y, 0.2, 1e-12);
  EXPECT_EQ(r.count, 39u);
}

TEST(Rmse, EmptyTraceIsAnError) { EXPECT_THROW(rmse_of({}), EvalError); }

TEST(IntegrateVo, Examples) {
  EXPECT_EQ(integrate_vo(std::vector<Pose2>{}).size(), 1u);
  const auto t = integrate_vo({Pose2(1, 0, kPi / 2), Pose2(1, 0, 0)});
  ASSERT_EQ(t.size(), 3u);
  expect_pose_near(t[0], Pose2::identity(), 0.0);
  expect_pose_near(t[1], Pose2(1, 0, kPi / 2), 1e-15);
  expect_pose_near(t[2], Pose2(1, 1, kPi / 2), 1e-15);
}

TEST(IntegrateVo, SquareLoopCloses) {
  std::vector<Pose2> rel;
  for (int side = 0; side < 4; ++side) {
    for (int i = 0; i < 9; ++i) rel.emplace_back(0.25, 0.0, 0.0);
    rel.emplace_back(0.25, 0.0, kPi / 2);
  }
  const auto t = integrate_vo(rel);
  expect_pose_near(t.back(), Pose2::identity(), 1e-9);
}

TEST(IntegrateVo, GraphRunMatchesGlobalPoses) {
  const PoseGraph g = curved_graph();
  const auto t = integrate_vo(g, 0);
  ASSERT_EQ(int(t.size()), g.run_length(0));
  Pose2 p;
  for (int i = 0; i < g.run_length(0); ++i) {
    expect_pose_near(t[std::size_t(i)], p, 1e-9);
    p = compose(p, Pose2(0.5, 0.0, 0.03));
  }
}

TEST(LocalizeStandalone, PairsEveryAnchoredKeyframe) {
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  const auto tr = localize_standalone(g, oracle, 1, 2);
  EXPECT_EQ(tr.size(), 40u);
  for (const auto& e : tr) {
    EXPECT_EQ(e.live.run, 1);
    EXPECT_EQ(e.map.run, 2);
    EXPECT_EQ(e.map.index, e.live.index);
    // Repeat 1 is offset (0.02, 0.05, 0.01) from teach, repeat 2 twice that.
    const Pose2 want = oracle::relative_global(compose(Pose2::identity(), Pose2(0.02, 0.05, 0.01)),
                                               Pose2(0.04, 0.10, 0.02));
    expect_pose_near(e.target, want, 1e-9);
  }
}

TEST(LocalizeStandalone, ConsistentWithMatrixCell) {
  const PoseGraph g = curved_graph();
  auto oracle = std::make_shared<OraclePredictor>(g);
  BiasedPredictor loc(oracle, Pose2(0.03, -0.01, 0.02));
  const Rmse direct = rmse_of(localize_standalone(g, loc, 3, 1));
  for (const auto& c : rmse_matrix(g, *oracle, loc, {1, 3}))
    if (c.repeat_run == 3 && c.teach_run == 1) {
      EXPECT_EQ(c.rmse.x, direct.x);
      EXPECT_EQ(c.rmse.y, direct.y);
      EXPECT_EQ(c.rmse.theta_deg, direct.theta_deg);
      EXPECT_EQ(c.rmse.count, direct.count);
    }
}

TEST(LocalizeStandalone, UnknownRunOrNoPairs) {
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  EXPECT_THROW(localize_standalone(g, oracle, 1, 9), EvalError);
  PoseGraph lone;
  lone.add_run(0, {{{0, 0}, "", "", "", 0.0}}, {});
  lone.add_run(1, {{{1, 0}, "", "", "", 0.0}}, {});
  OraclePredictor o2(lone);
  EXPECT_THROW(localize_standalone(lone, o2, 1, 0), EvalError);
}

TEST(Fuse, WeightedAverageWithWrappedTheta) {
  const FusionWeights w;
  const Pose2 f = fuse(Pose2(1, 0, kPi - 0.1), Pose2(0, 1, -kPi + 0.1), w);
  EXPECT_NEAR(f.x, 0.3, 1e-15);
  EXPECT_NEAR(f.y, 0.7, 1e-15);
  EXPECT_NEAR(wrap_angle(f.theta - (kPi - 0.1 + 0.7 * 0.2)), 0.0, 1e-12);
  EXPECT_THROW((FusionWeights{0.5, 0.6}.validate()), EvalError);
  EXPECT_THROW((FusionWeights{-0.1, 1.1}.validate()), EvalError);
}

TEST(PathFollow, OracleHasZeroError) {
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  const auto tr = path_follow(g, oracle, oracle, 2, 0, 5);
  EXPECT_EQ(tr.steps.size(), 40u);
  EXPECT_FALSE(tr.truncated);
  for (const auto& e : fusion_errors(tr)) expect_pose_near(e, Pose2::identity(), 1e-9);
  for (std::size_t k = 0; k < tr.steps.size(); ++k) EXPECT_EQ(tr.steps[k].teach_index, int(k));
}

TEST(PathFollow, ConstantVoBiasConvergesToClosedForm) {
  const PoseGraph g = build_graph(line_poses(60, 0.5), {line_poses(60, 0.5, 0.1)});
  auto oracle = std::make_shared<OraclePredictor>(g);
  const double b = 0.05;
  BiasedPredictor vo(oracle, Pose2(0.0, b, 0.0));
  const FusionWeights w{0.3, 0.7};
  const auto tr = path_follow(g, vo, *oracle, 1, 0, 5, w);
  const double want = oracle::fusion_fixed_point(w.vo, b);
  EXPECT_NEAR(want, 0.3 * 0.05 / 0.7, 1e-15);
  const auto errs = fusion_errors(tr);
  EXPECT_NEAR(errs.back().y, want, 1e-9);
  EXPECT_NEAR(errs.back().x, 0.0, 1e-9);
  // Geometric approach to the fixed point.
  for (std::size_t k = 1; k < errs.size(); ++k)
    EXPECT_NEAR(errs[k].y, want * (1.0 - std::pow(w.vo, double(k))), 1e-9);
}

TEST(PathFollow, UnitWindowPureLocalizationMatchesStandalone) {
  const PoseGraph g = curved_graph();
  auto oracle = std::make_shared<OraclePredictor>(g);
  BiasedPredictor loc(oracle, Pose2(0.02, -0.03, 0.01));
  NoisyPredictor vo(oracle, {0.01, 0.01, 0.001}, 4);
  const auto tr = path_follow(g, vo, loc, 1, 0, 1, FusionWeights{0.0, 1.0});
  const auto ref = localize_standalone(g, loc, 1, 0);
  ASSERT_EQ(tr.steps.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_EQ(tr.steps[k].teach_index, ref[k].map.index);
    expect_pose_near(tr.steps[k].corrected, ref[k].prediction, 1e-12);
  }
}

TEST(PathFollow, TruncatesWhenTeachRunsOut) {
  const PoseGraph g = build_graph(line_poses(10, 0.5), {line_poses(20, 0.5)}, GraphBuildOptions{0.0, 100.0});
  OraclePredictor oracle(g);
  const auto tr = path_follow(g, oracle, oracle, 1, 0, 3);
  EXPECT_TRUE(tr.truncated);
  EXPECT_EQ(tr.steps.size(), 10u);
  EXPECT_EQ(tr.steps.back().teach_index, 9);
  std::ostringstream os;
  write_fusion_csv({tr}, os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(s.size() - 3), ",1\n");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 11);
}

TEST(PathFollow, RejectsBadArguments) {
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  EXPECT_THROW(path_follow(g, oracle, oracle, 1, 0, 0), EvalError);
  EXPECT_THROW(path_follow(g, oracle, oracle, 1, 7, 3), EvalError);
  EXPECT_THROW(path_follow(g, oracle, oracle, 1, 0, 3, FusionWeights{0.5, 0.4}), EvalError);
}

TEST(ErrorCdf, ZeroSingleAndSorted) {
  const auto z = error_cdf(std::vector<Pose2>(5, Pose2::identity()));
  EXPECT_EQ(z.x, std::vector<double>(5, 0.0));
  const auto one = error_cdf({Pose2(-0.2, 0.1, -0.3)});
  EXPECT_EQ(one.x, std::vector<double>{0.2});
  EXPECT_EQ(one.theta, std::vector<double>{0.3});

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<Pose2> errs;
  std::vector<double> ys;
  for (int i = 0; i < 500; ++i) {
    errs.emplace_back(n(rng), n(rng), 0.1 * n(rng));
    ys.push_back(std::abs(errs.back().y));
  }
  std::sort(ys.begin(), ys.end());
  const auto c = error_cdf(errs);
  EXPECT_EQ(c.y, ys);
  EXPECT_TRUE(std::is_sorted(c.x.begin(), c.x.end()));
  EXPECT_TRUE(std::is_sorted(c.theta.begin(), c.theta.end()));
}

TEST(Report, CsvSchemaAndFiles) {
  namespace fs = std::filesystem;
  const PoseGraph g = curved_graph();
  OraclePredictor oracle(g);
  EvalOptions opts;
  opts.fusion_pairs = {{1, 2}, {3, 1}};
  const EvalReport rep = evaluate(g, oracle, oracle, {1, 2, 3}, opts);
  EXPECT_EQ(rep.rmse.size(), 9u);
  EXPECT_EQ(rep.loc_cdfs.size(), 6u);
  EXPECT_EQ(rep.fusion.size(), 2u);
  EXPECT_EQ(rep.conditions.at(2), "night-green");

  std::ostringstream os;
  write_rmse_csv(rep.rmse, os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("repeat_run,teach_run,rmse_x_m,rmse_y_m,rmse_theta_deg,kind\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 10);
  std::ostringstream tables;
  write_rmse_tables(rep, tables);
  EXPECT_NE(tables.str().find("1:day-green"), std::string::npos);

  const fs::path dir = fs::temp_directory_path() / "tnr_test_report";
  fs::remove_all(dir);
  const auto files = write_report(rep, dir.string());
  EXPECT_GE(files.size(), 9u);
  for (const auto& f : files) {
    ASSERT_TRUE(fs::exists(f)) << f;
    EXPECT_GT(fs::file_size(f), 0u) << f;
  }
  for (const char* name : {"rmse_matrix.csv", "vo_tracks.csv", "error_cdf.csv", "fusion_trace.csv",
                           "rmse_matrix.png", "vo_tracks.png", "fusion_lateral.png"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  const Image heat = read_png((dir / "rmse_matrix.png").string());
  EXPECT_GT(heat.width, 0);
  fs::remove_all(dir);
}
