#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tnr/geometry.hpp"

using namespace tnr;

namespace {

void expect_pose_near(const Pose2& a, const Pose2& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(wrap_angle(a.theta - b.theta), 0.0, tol);
}

Pose2 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(-10.0, 10.0), th(-20.0, 20.0);
  return Pose2(xy(rng), xy(rng), th(rng));
}

}  // namespace

TEST(WrapAngle, Examples) {
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(2 * kPi), 0.0, 1e-15);
  EXPECT_NEAR(wrap_angle(-1.5 * kPi), 0.5 * kPi, 1e-15);
}

TEST(WrapAngle, BranchPointMapsToPlusPi) {
  EXPECT_EQ(wrap_angle(kPi), kPi);
  EXPECT_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
}

TEST(WrapAngle, RangeIdempotenceCongruence) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double t = u(rng);
    const double w = wrap_angle(t);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_EQ(wrap_angle(w), w);
    const double k = (t - w) / (2 * kPi);
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(Pose2, ConstructorWrapsTheta) {
  const Pose2 p(1, 2, 3 * kPi);
  EXPECT_NEAR(p.theta, kPi, 1e-12);
  EXPECT_TRUE(p.finite());
  EXPECT_FALSE(Pose2(std::nan(""), 0, 0).finite());
}

TEST(Compose, Examples) {
  const Pose2 p(0.3, -1.2, 0.7);
  expect_pose_near(compose(Pose2::identity(), p), p, 0.0);
  expect_pose_near(compose(p, inverse(p)), Pose2::identity(), 1e-12);
  expect_pose_near(compose({1.0, 0.0, kPi / 2}, {1.0, 0.0, 0.0}), {1.0, 1.0, kPi / 2}, 1e-15);
}

TEST(Inverse, Examples) {
  expect_pose_near(inverse(Pose2::identity()), Pose2::identity(), 0.0);
  expect_pose_near(inverse({1, 2, 0}), {-1, -2, 0}, 0.0);
  expect_pose_near(inverse({1, 0, kPi / 2}), {0, 1, -kPi / 2}, 1e-15);
}

TEST(Relative, IsPoseOfARelativeToB) {
  const Pose2 a(2, 3, 0.4), b(-1, 0.5, -1.1);
  expect_pose_near(compose(b, relative(a, b)), a, 1e-12);
}

TEST(WeightedNorm, Examples) {
  EXPECT_EQ(weighted_norm(Pose2::identity()), 0.0);
  EXPECT_DOUBLE_EQ(weighted_norm({1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(weighted_norm({0, 0, 1}), std::sqrt(10.0));
  EXPECT_DOUBLE_EQ(weighted_norm({3, 4, 0}, LossWeights(1, 1, 1)), 5.0);
}

TEST(LossWeights, RejectsNonPositive) {
  EXPECT_THROW(LossWeights(0, 1, 1), std::invalid_argument);
  EXPECT_THROW(LossWeights(1, -1, 1), std::invalid_argument);
  const LossWeights w;
  EXPECT_EQ(w.w_x, 1.0);
  EXPECT_EQ(w.w_y, 1.0);
  EXPECT_EQ(w.w_theta, 10.0);
}

TEST(GeometryProperties, GroupAxiomsRandomized) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    expect_pose_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9);
    expect_pose_near(compose(a, inverse(a)), Pose2::identity(), 1e-12);
    expect_pose_near(compose(inverse(a), a), Pose2::identity(), 1e-12);
    expect_pose_near(compose(a, Pose2::identity()), a, 1e-12);
    const Pose2 ab = compose(a, b);
    EXPECT_GT(ab.theta, -kPi);
    EXPECT_LE(ab.theta, kPi);
  }
}

TEST(GeometryProperties, MatchesHomogeneousMatrixOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    expect_pose_near(compose(a, b), oracle::from_matrix(oracle::to_matrix(a) * oracle::to_matrix(b)), 1e-12);
    expect_pose_near(inverse(a), oracle::from_matrix(oracle::to_matrix(a).inverse()), 1e-12);
  }
}
