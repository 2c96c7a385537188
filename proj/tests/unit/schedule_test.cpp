#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "poselift/schedule.hpp"
#include "test_support.hpp"

using namespace poselift;

namespace {

// Closed form evaluated in long double, independent of the product recursion.
long double cosine_ratio(int t, int t_max) {
  const long double s = 0.008L;
  const long double pi = 3.141592653589793238462643383279502884L;
  const auto f = [&](int k) {
    const long double c = std::cos(((static_cast<long double>(k) / t_max + s) / (1.0L + s)) * pi / 2.0L);
    return c * c;
  };
  return f(t) / f(0);
}

}  // namespace

TEST(Schedule, MatchesHighPrecisionReference) {
  const NoiseSchedule s = make_cosine_schedule(1000);
  // 40-digit evaluations of the clipped product.
  EXPECT_NEAR(s.alpha_bar(1), 0.999958715775178, 1e-13);
  EXPECT_NEAR(s.alpha_bar(250), 0.847012161326905, 1e-12);
  EXPECT_NEAR(s.alpha_bar(500), 0.493843590440638, 1e-12);
  EXPECT_NEAR(s.alpha_bar(999), 2.42876690703447e-6, 1e-15);
  EXPECT_NEAR(s.alpha_bar(1000), 2.42876690703447e-9, 1e-18);
  EXPECT_NEAR(s.alpha_bar(500), 0.494, 0.001);
}

TEST(Schedule, EndpointsAndClipping) {
  const NoiseSchedule s = make_cosine_schedule(1000);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  EXPECT_EQ(s.beta(0), 0.0);
  EXPECT_LT(s.alpha_bar(1000), 1e-3);
  EXPECT_EQ(s.beta(1000), 0.999);
  for (int t = 1; t <= 1000; ++t) {
    ASSERT_GT(s.beta(t), 0.0);
    ASSERT_LT(s.beta(t), 1.0);
    ASSERT_EQ(s.alpha(t), 1.0 - s.beta(t));
  }
}

TEST(Schedule, ProductIdentityAndMonotonicity) {
  for (int t_max : {2, 10, 1000}) {
    const NoiseSchedule s = make_cosine_schedule(t_max);
    for (int t = 1; t <= t_max; ++t) {
      ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      const double expected = s.alpha_bar(t - 1) * s.alpha(t);
      ASSERT_LE(std::abs(s.alpha_bar(t) - expected), 1e-12 * expected);
    }
  }
}

TEST(Schedule, AgreesWithClosedFormWhereUnclipped) {
  const NoiseSchedule s = make_cosine_schedule(1000);
  for (int t = 0; t < 1000; t += 37) {
    const long double ref = cosine_ratio(t, 1000);
    EXPECT_LE(std::abs(static_cast<long double>(s.alpha_bar(t)) - ref), 1e-12L * ref) << t;
  }
}

TEST(Schedule, RejectsBadArguments) {
  EXPECT_THROW(make_cosine_schedule(1), InvalidArgument);
  const NoiseSchedule s = make_cosine_schedule(10);
  EXPECT_THROW(s.check_timestep(-1), InvalidArgument);
  EXPECT_THROW(s.check_timestep(11), InvalidArgument);
  EXPECT_THROW(diffuse(PoseSeq3D(1, 1), 11, s, PoseSeq3D(1, 1)), InvalidArgument);
  EXPECT_THROW(diffuse(PoseSeq3D(1, 1), 1, s, PoseSeq3D(1, 2)), ShapeError);
}

TEST(Schedule, CsvDump) {
  std::ostringstream out;
  make_cosine_schedule(4).write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,beta,alpha,alpha_bar");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Diffuse, ZeroNoiseAndZeroTime) {
  std::mt19937_64 gen(3);
  const NoiseSchedule s = make_cosine_schedule(1000);
  const PoseSeq3D y0 = testing_support::random_pose(gen, 2, 4, 1.0, 1.0);
  const PoseSeq3D eps = testing_support::random_pose(gen, 2, 4, 0.0, 1.0);
  EXPECT_EQ(diffuse(y0, 0, s, eps), y0);
  const PoseSeq3D shrunk = diffuse(y0, 300, s, PoseSeq3D(2, 4));
  for (std::size_t i = 0; i < y0.size(); ++i) {
    EXPECT_DOUBLE_EQ(shrunk.values()[i], std::sqrt(s.alpha_bar(300)) * y0.values()[i]);
  }
}

TEST(Diffuse, IsAffineInSignalAndNoise) {
  std::mt19937_64 gen(4);
  const NoiseSchedule s = make_cosine_schedule(1000);
  const auto r = [&] { return testing_support::random_pose(gen, 1, 5, 0.0, 1.0); };
  const PoseSeq3D a = r(), b = r(), e1 = r(), e2 = r();
  PoseSeq3D ab(1, 5), ee(1, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab.values()[i] = a.values()[i] + b.values()[i];
    ee.values()[i] = e1.values()[i] + e2.values()[i];
  }
  const PoseSeq3D lhs = diffuse(ab, 400, s, ee);
  const PoseSeq3D x = diffuse(a, 400, s, e1);
  const PoseSeq3D y = diffuse(b, 400, s, e2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(lhs.values()[i], x.values()[i] + y.values()[i], 1e-12);
}

TEST(Diffuse, MonteCarloMoments) {
  const NoiseSchedule s = make_cosine_schedule(1000);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const PoseSeq3D y0(1, 1, {0.5, -1.0, 2.0});
  const int trials = 10000;
  for (int t : {1, 500, 999}) {
    std::array<double, 3> sum{}, sq{};
    for (int k = 0; k < trials; ++k) {
      const PoseSeq3D eps(1, 1, {n(gen), n(gen), n(gen)});
      const PoseSeq3D y = diffuse(y0, t, s, eps);
      for (int c = 0; c < 3; ++c) {
        sum[c] += y.values()[c];
        sq[c] += y.values()[c] * y.values()[c];
      }
    }
    const double var = 1.0 - s.alpha_bar(t);
    for (int c = 0; c < 3; ++c) {
      const double mean = sum[c] / trials;
      const double sample_var = sq[c] / trials - mean * mean;
      EXPECT_NEAR(mean, std::sqrt(s.alpha_bar(t)) * y0.values()[c], 4.0 * std::sqrt(var / trials)) << t;
      EXPECT_NEAR(sample_var, var, 0.1 * var) << t;
    }
  }
}

TEST(SignalScaling, ScaleAndUnscale) {
  const PoseSeq3D p(1, 1, {1.0, -0.5, 2.0});
  EXPECT_EQ(scale_signal(p, 2.0), PoseSeq3D(1, 1, {2.0, -1.0, 4.0}));
  EXPECT_EQ(scale_signal(p, 1.0), p);
  EXPECT_EQ(unscale_signal(scale_signal(p, 2.0), 2.0), p);
  EXPECT_THROW(scale_signal(p, 0.0), InvalidArgument);
  EXPECT_THROW(unscale_signal(p, -1.0), InvalidArgument);

  const SignalScaling scaling{2.0};
  const PoseSeq3D mm(1, 1, {1500.0, -250.0, 4000.0});
  EXPECT_EQ(scaling.encode(mm), PoseSeq3D(1, 1, {3.0, -0.5, 8.0}));
  EXPECT_LT(testing_support::max_abs_diff(scaling.decode(scaling.encode(mm)), mm), 1e-9);
}
