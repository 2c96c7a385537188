#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "poselift/denoiser.hpp"
#include "test_support.hpp"

using namespace poselift;
using testing_support::max_abs_diff;
using testing_support::random_pose;

TEST(TimestepEmbed, Examples) {
  const Eigen::VectorXd zero = timestep_embed(0, 8);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(zero[i], i % 2 == 0 ? 0.0 : 1.0);
  const Eigen::VectorXd one = timestep_embed(1, 2);
  EXPECT_NEAR(one[0], 0.8415, 5e-5);
  EXPECT_NEAR(one[1], 0.5403, 5e-5);
  // Entry pair i uses frequency 10000^(-2i/d).
  const Eigen::VectorXd e = timestep_embed(37, 6);
  EXPECT_DOUBLE_EQ(e[2], std::sin(37.0 / std::pow(10000.0, 2.0 / 6.0)));
  EXPECT_DOUBLE_EQ(e[5], std::cos(37.0 / std::pow(10000.0, 4.0 / 6.0)));
  EXPECT_THROW(timestep_embed(3, 5), InvalidArgument);
  EXPECT_THROW(timestep_embed(3, 0), InvalidArgument);
}

TEST(TimestepEmbed, BoundedAndDeterministic) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> t(0, 1000);
  for (int i = 0; i < 100; ++i) {
    const int tt = t(gen);
    const Eigen::VectorXd e = timestep_embed(tt, 128);
    EXPECT_LE(e.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ(e, timestep_embed(tt, 128));
  }
}

TEST(TargetConversion, EpsAndY0AreInverse) {
  const NoiseSchedule s = make_cosine_schedule(1000);
  std::mt19937_64 gen(2);
  for (int t : {1, 10, 500, 999}) {
    const PoseSeq3D y0 = random_pose(gen, 3, 17, 8.0, 1.0);
    const PoseSeq3D eps = random_pose(gen, 3, 17, 0.0, 1.0);
    const PoseSeq3D yt = diffuse(y0, t, s, eps);
    const PoseSeq3D y0_back = eps_to_y0(yt, eps, t, s);
    const PoseSeq3D eps_back = y0_to_eps(yt, y0, t, s);
    for (std::size_t i = 0; i < y0.size(); ++i) {
      // Division by sqrt(abar) at large t amplifies rounding in y_t.
      const double tol = 1e-9 * std::max(1.0, std::abs(y0.values()[i])) / std::sqrt(s.alpha_bar(t));
      EXPECT_NEAR(y0_back.values()[i], y0.values()[i], tol);
      EXPECT_NEAR(eps_back.values()[i], eps.values()[i], 1e-9 * std::max(1.0, std::abs(eps.values()[i])));
    }
  }
  EXPECT_THROW(y0_to_eps(PoseSeq3D(1, 1), PoseSeq3D(1, 1), 0, s), InvalidArgument);
}

TEST(Oracles, PerfectReturnsGroundTruthInSignalUnits) {
  std::mt19937_64 gen(3);
  const PoseSeq3D gt = random_pose(gen, 2, 17);
  const SignalScaling scaling{2.0};
  const auto d = oracle_perfect(gt, scaling);
  const PoseSeq2D x(2, 17);
  for (int t : {0, 1, 1000}) {
    EXPECT_EQ(d->predict(random_pose(gen, 2, 17, 0, 1), x, t, {}), scaling.encode(gt));
  }
}

TEST(Oracles, FlippedCallsSeeMirroredTruth) {
  std::mt19937_64 gen(4);
  const Skeleton sk = Skeleton::h36m();
  const PoseSeq3D gt = random_pose(gen, 1, 17);
  const auto d = oracle_perfect(gt, {}, sk);
  const PoseSeq3D out = d->predict(PoseSeq3D(1, 17), PoseSeq2D(1, 17), 5, {0, 0, true});
  EXPECT_EQ(out, SignalScaling{}.encode(flip_pose3d(gt, sk)));
  const auto plain = oracle_perfect(gt);
  EXPECT_THROW(plain->predict(PoseSeq3D(1, 17), PoseSeq2D(1, 17), 5, {0, 0, true}), InvalidArgument);
}

TEST(Oracles, ContractiveBlendsTowardTruth) {
  std::mt19937_64 gen(5);
  const PoseSeq3D gt = random_pose(gen, 1, 5);
  const PoseSeq3D y = random_pose(gen, 1, 5, 0.0, 1.0);
  const SignalScaling scaling;
  const PoseSeq3D g = scaling.encode(gt);
  const auto half = oracle_contractive(gt, 0.5);
  const PoseSeq3D out = half->predict(y, PoseSeq2D(1, 5), 10, {});
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_NEAR(out.values()[i], 0.5 * g.values()[i] + 0.5 * y.values()[i], 1e-12);
  }
  const auto near_perfect = oracle_contractive(gt, 1.0 - 1e-9);
  EXPECT_LT(max_abs_diff(near_perfect->predict(y, PoseSeq2D(1, 5), 10, {}), g), 1e-8);
  EXPECT_THROW(oracle_contractive(gt, 1.0), InvalidArgument);
  EXPECT_THROW(oracle_contractive(gt, -0.1), InvalidArgument);
}

TEST(Oracles, NoisyOracle) {
  std::mt19937_64 gen(6);
  const PoseSeq3D gt = random_pose(gen, 1, 17);
  const PoseSeq3D y(1, 17);
  const PoseSeq2D x(1, 17);
  EXPECT_EQ(oracle_noisy(gt, {0.0}, 9)->predict(y, x, 3, {}), oracle_perfect(gt)->predict(y, x, 3, {}));

  const auto d = oracle_noisy(gt, {20.0}, 9);
  const PoseSeq3D a = d->predict(y, x, 3, {2, 4, false});
  EXPECT_EQ(a, d->predict(y, x, 3, {2, 4, false}));
  EXPECT_NE(a, d->predict(y, x, 3, {2, 5, false}));
  EXPECT_NE(a, d->predict(y, x, 3, {3, 4, false}));

  // Empirical spread in millimeters matches sigma.
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    const PoseSeq3D mm = SignalScaling{}.decode(d->predict(y, x, 3, {0, k, false}));
    for (std::size_t i = 0; i < mm.size(); ++i, ++n) sq += std::pow(mm.values()[i] - gt.values()[i], 2);
  }
  EXPECT_NEAR(std::sqrt(sq / n), 20.0, 0.6);

  EXPECT_THROW(oracle_noisy(gt, {-1.0}, 1), InvalidArgument);
  EXPECT_THROW(oracle_noisy(gt, {1.0, 2.0}, 1), InvalidArgument);
  std::vector<double> per_joint(17, 0.0);
  per_joint[3] = 50.0;
  const PoseSeq3D only3 = oracle_noisy(gt, per_joint, 1)->predict(y, x, 3, {});
  const PoseSeq3D exact = SignalScaling{}.encode(gt);
  for (std::size_t j = 0; j < 17; ++j) {
    if (j == 3) {
      EXPECT_NE(only3.at(0, j), exact.at(0, j));
    } else {
      EXPECT_EQ(only3.at(0, j), exact.at(0, j));
    }
  }
}

TEST(Denoise, RunsEveryHypothesis) {
  std::mt19937_64 gen(7);
  const PoseSeq3D gt = random_pose(gen, 2, 17);
  const auto d = oracle_perfect(gt);
  const HypothesisSet noisy({random_pose(gen, 2, 17, 0, 1), random_pose(gen, 2, 17, 0, 1)});
  const HypothesisSet out = denoise(noisy, PoseSeq2D(2, 17), 10, *d);
  ASSERT_EQ(out.count(), 2u);
  EXPECT_EQ(out[1], SignalScaling{}.encode(gt));
  EXPECT_THROW(denoise(noisy, PoseSeq2D(3, 17), 10, *d), ShapeError);
}
