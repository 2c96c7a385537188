#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "poselift/aggregate.hpp"
#include "poselift/metrics.hpp"
#include "test_support.hpp"

using namespace poselift;
using testing_support::random_pose;

namespace {

CameraIntrinsics unit_camera() {
  CameraIntrinsics c;
  c.fx = c.fy = 1.0;
  c.cx = c.cy = 0.0;
  return c;
}

struct TwoByTwo {
  HypothesisSet hs;
  PoseSeq2D x{1, 2, {0.0, 0.0, 0.5, 0.0}};
};

TwoByTwo two_by_two() {
  const PoseSeq3D a(1, 2, {0.0, 0.0, 2.0, 1.2, 0.0, 2.0});
  const PoseSeq3D b(1, 2, {0.1, 0.0, 1.0, 1.0, 0.0, 2.0});
  return {HypothesisSet({a, b})};
}

bool joint_from_some_hypothesis(const HypothesisSet& hs, const PoseSeq3D& out) {
  for (std::size_t f = 0; f < out.frames(); ++f) {
    for (std::size_t j = 0; j < out.joints(); ++j) {
      bool found = false;
      for (const auto& h : hs) found = found || (h.at(f, j) == out.at(f, j));
      if (!found) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Average, Examples) {
  const PoseSeq3D a(1, 1, {0, 0, 1});
  const PoseSeq3D b(1, 1, {0, 0, 3});
  EXPECT_EQ(agg_average(HypothesisSet({a, b})), PoseSeq3D(1, 1, {0, 0, 2}));
  EXPECT_EQ(agg_average(HypothesisSet({a})), a);
  PoseSeq3D neg = a;
  for (double& v : neg.values()) v = -v;
  EXPECT_EQ(agg_average(HypothesisSet({a, neg})), PoseSeq3D(1, 1));
}

TEST(Jpma, HandTracedTwoByTwo) {
  const auto ex = two_by_two();
  const AggregationReport r = agg_jpma(ex.hs, ex.x, unit_camera());
  EXPECT_EQ(r.chosen, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.pose.at(0, 0), ex.hs[0].at(0, 0));
  EXPECT_EQ(r.pose.at(0, 1), ex.hs[1].at(0, 1));
  EXPECT_NEAR(r.errors[0], 0.0, 1e-12);
  EXPECT_NEAR(r.errors[1], 0.0, 1e-12);
}

TEST(Ppma, HandTracedTwoByTwoPicksFirstWholeHypothesis) {
  const auto ex = two_by_two();
  const AggregationReport r = agg_ppma(ex.hs, ex.x, unit_camera());
  EXPECT_EQ(r.pose, ex.hs[0]);
  EXPECT_EQ(r.chosen, (std::vector<int>{0, 0}));
}

TEST(Ppma, ExactTieGoesToLowestIndex) {
  const PoseSeq3D a(1, 1, {0.0, 0.0, 10.0});
  const PoseSeq3D b(1, 1, {0.0, 0.0, 20.0});
  const PoseSeq2D x(1, 1, {0.0, 0.0});
  EXPECT_EQ(agg_ppma(HypothesisSet({a, b}), x, unit_camera()).chosen, (std::vector<int>{0}));
  EXPECT_EQ(agg_ppma(HypothesisSet({b, a}), x, unit_camera()).pose, b);
  EXPECT_EQ(agg_jpma(HypothesisSet({b, a}), x, unit_camera()).pose, b);
}

TEST(Selection, IdenticalHypothesesChooseIndexZero) {
  std::mt19937_64 gen(1);
  const PoseSeq3D p = random_pose(gen, 2, 17);
  const HypothesisSet hs({p, p, p});
  const PoseSeq2D x = project(p, CameraIntrinsics{});
  for (const auto& r : {agg_jpma(hs, x, CameraIntrinsics{}), agg_ppma(hs, x, CameraIntrinsics{}), agg_pbest(hs, p),
                        agg_jbest(hs, p)}) {
    EXPECT_EQ(r.pose, p);
    EXPECT_TRUE(std::all_of(r.chosen.begin(), r.chosen.end(), [](int c) { return c == 0; }));
  }
}

TEST(OracleSelectors, BruteForceTwoByTwo) {
  const PoseSeq3D gt(1, 2, {0, 0, 1000, 100, 0, 1000});
  const PoseSeq3D h1(1, 2, {0, 0, 1000, 110, 0, 1000});
  const PoseSeq3D h2(1, 2, {10, 0, 1000, 100, 0, 1000});
  const HypothesisSet hs({h1, h2});
  // Enumerate the four joint-wise assemblies; the best has error 0.
  double best = 1e9;
  for (int c0 = 0; c0 < 2; ++c0) {
    for (int c1 = 0; c1 < 2; ++c1) {
      PoseSeq3D p(1, 2);
      p.at(0, 0) = hs[static_cast<std::size_t>(c0)].at(0, 0);
      p.at(0, 1) = hs[static_cast<std::size_t>(c1)].at(0, 1);
      best = std::min(best, mpjpe(p, gt));
    }
  }
  EXPECT_EQ(best, 0.0);
  EXPECT_DOUBLE_EQ(mpjpe(agg_pbest(hs, gt).pose, gt), 5.0);
  EXPECT_DOUBLE_EQ(mpjpe(agg_jbest(hs, gt).pose, gt), best);
}

TEST(OracleSelectors, GroundTruthInSetIsReturned) {
  std::mt19937_64 gen(2);
  const PoseSeq3D gt = random_pose(gen, 2, 17);
  const HypothesisSet hs({random_pose(gen, 2, 17), gt, random_pose(gen, 2, 17)});
  EXPECT_EQ(agg_pbest(hs, gt).pose, gt);
  EXPECT_EQ(agg_jbest(hs, gt).pose, gt);
}

TEST(Aggregate, SingleHypothesisCollapse) {
  std::mt19937_64 gen(3);
  const PoseSeq3D h = random_pose(gen, 2, 17);
  const PoseSeq3D gt = random_pose(gen, 2, 17);
  const PoseSeq2D x = project(gt, CameraIntrinsics{});
  const HypothesisSet hs({h});
  const AggregationInputs in{&x, nullptr, &gt};
  const CameraIntrinsics cam;
  const AggregationInputs full{&x, &cam, &gt};
  for (Aggregator a : {Aggregator::kAverage, Aggregator::kPpma, Aggregator::kJpma, Aggregator::kPbest,
                       Aggregator::kJbest}) {
    EXPECT_EQ(aggregate(a, hs, full).pose, h) << to_string(a);
  }
  EXPECT_THROW(aggregate(Aggregator::kJpma, hs, in), InvalidArgument);
}

TEST(Aggregate, OracleSelectorsNeedGroundTruth) {
  const HypothesisSet hs({PoseSeq3D(1, 1, {0, 0, 10})});
  EXPECT_THROW(aggregate(Aggregator::kPbest, hs, {}), MissingGroundTruth);
  EXPECT_THROW(aggregate(Aggregator::kJbest, hs, {}), MissingGroundTruth);
  EXPECT_TRUE(requires_ground_truth(Aggregator::kJbest));
  EXPECT_FALSE(requires_ground_truth(Aggregator::kJpma));
  EXPECT_EQ(parse_aggregator("jpma"), Aggregator::kJpma);
  EXPECT_THROW(parse_aggregator("median"), InvalidArgument);
}

TEST(Aggregate, DominanceAndClosureOnRandomSets) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0, 30);
  const CameraIntrinsics cam;
  for (int trial = 0; trial < 200; ++trial) {
    const PoseSeq3D gt = random_pose(gen, 2, 17);
    std::vector<PoseSeq3D> v;
    for (int h = 0; h < 8; ++h) {
      PoseSeq3D p = gt;
      for (double& c : p.values()) c += n(gen);
      v.push_back(p);
    }
    const HypothesisSet hs(v);
    PoseSeq2D x = project(gt, cam);
    for (double& c : x.values()) c += n(gen) / 30.0;
    const double jbest = mpjpe(agg_jbest(hs, gt).pose, gt);
    const double pbest = mpjpe(agg_pbest(hs, gt).pose, gt);
    double worst = 0.0;
    for (const auto& h : hs) worst = std::max(worst, mpjpe(h, gt));
    const auto jpma = agg_jpma(hs, x, cam);
    const auto ppma = agg_ppma(hs, x, cam);
    ASSERT_LE(jbest, pbest);
    ASSERT_LE(pbest, worst);
    ASSERT_LE(jbest, mpjpe(jpma.pose, gt));
    ASSERT_LE(pbest, mpjpe(ppma.pose, gt));
    ASSERT_TRUE(joint_from_some_hypothesis(hs, jpma.pose));
    ASSERT_TRUE(joint_from_some_hypothesis(hs, ppma.pose));
    ASSERT_TRUE(joint_from_some_hypothesis(hs, agg_jbest(hs, gt).pose));

    // Reordering hypotheses does not change the JPMA pose (ties have probability zero here).
    std::vector<PoseSeq3D> reversed(v.rbegin(), v.rend());
    ASSERT_EQ(agg_jpma(HypothesisSet(reversed), x, cam).pose, jpma.pose);
  }
}

TEST(Jpma, BehindCameraHypothesisIsSkipped) {
  const PoseSeq3D behind(1, 1, {0.0, 0.0, -5.0});
  const PoseSeq3D front(1, 1, {3.0, 0.0, 10.0});
  const PoseSeq2D x(1, 1, {0.0, 0.0});
  const auto r = agg_jpma(HypothesisSet({behind, front}), x, unit_camera());
  EXPECT_EQ(r.chosen, (std::vector<int>{1}));
  EXPECT_THROW(agg_jpma(HypothesisSet({behind}), x, unit_camera()), AggregationError);
  EXPECT_THROW(agg_ppma(HypothesisSet({behind}), x, unit_camera()), AggregationError);
}
