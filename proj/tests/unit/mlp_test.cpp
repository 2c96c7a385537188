#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "poselift/camera.hpp"
#include "poselift/mlp.hpp"
#include "poselift/train.hpp"
#include "test_support.hpp"

using namespace poselift;
using testing_support::random_pose;

namespace {

MlpConfig small_config(std::size_t embed_dim = 0) {
  MlpConfig c;
  c.joints = 3;
  c.hidden_width = 8;
  c.hidden_layers = 2;
  c.embed_dim = embed_dim;
  return c;
}

std::vector<TrainingExample> random_batch(std::mt19937_64& gen, std::size_t n, std::size_t joints) {
  std::uniform_int_distribution<int> t(0, 1000);
  std::vector<TrainingExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample e;
    e.noisy = random_pose(gen, 2, joints, 0.0, 1.0);
    const PoseSeq3D uv = random_pose(gen, 2, joints, 500.0, 200.0);
    e.keypoints = PoseSeq2D(2, joints);
    for (std::size_t f = 0; f < 2; ++f) {
      for (std::size_t j = 0; j < joints; ++j) e.keypoints.at(f, j) = uv.at(f, j).head<2>();
    }
    e.t = t(gen);
    e.target = random_pose(gen, 2, joints, 0.0, 1.0);
    batch.push_back(std::move(e));
  }
  return batch;
}

// Central differences of the forward loss; compared entry by entry.
void check_gradient(const MlpConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  DenoiserParams params = DenoiserParams::initialize(cfg, seed);
  std::normal_distribution<double> n(0.0, 0.1);
  for (double& v : params.flat()) v += n(gen);  // nonzero biases too
  const auto batch = random_batch(gen, 3, cfg.joints);
  const DenoiserParams grad = grad_loss(params, batch);
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.parameter_count(); ++i) {
    DenoiserParams plus = params, minus = params;
    plus.flat()[i] += h;
    minus.flat()[i] -= h;
    const double fd = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2.0 * h);
    const double g = grad.flat()[i];
    const double denom = std::max({std::abs(g), std::abs(fd), 1e-6});
    ASSERT_LE(std::abs(g - fd) / denom, 1e-4) << "parameter " << i << " analytic " << g << " numeric " << fd;
  }
}

std::vector<TrainingPair> single_pair_dataset() {
  const PoseSeq3D pose(1, 3, {0, 0, 4000, 100, 0, 4000, -100, 50, 4100});
  return {{project(pose, CameraIntrinsics{}), pose}};
}

}  // namespace

TEST(Mlp, ParameterLayout) {
  const DenoiserParams plain(small_config());
  EXPECT_FALSE(plain.has_embed_projection());
  // 15->8, 8->8, 8->9 weights and biases.
  EXPECT_EQ(plain.parameter_count(), 15u * 8 + 8 + 8 * 8 + 8 + 8 * 9 + 9);
  const DenoiserParams proj(small_config(4));
  EXPECT_TRUE(proj.has_embed_projection());
  EXPECT_EQ(proj.parameter_count(), plain.parameter_count() + 8 * 4);
  EXPECT_THROW(DenoiserParams(small_config(3)), InvalidArgument);
  EXPECT_THROW(plain.embed_projection(), InvalidArgument);
}

TEST(Mlp, ZeroWeightsReturnOutputBias) {
  DenoiserParams p(small_config());
  for (std::size_t k = 0; k < 9; ++k) p.bias(2)[static_cast<Eigen::Index>(k)] = 0.5 * static_cast<double>(k);
  std::mt19937_64 gen(1);
  const auto batch = random_batch(gen, 1, 3);
  const PoseSeq3D out = mlp_forward(p, batch[0].noisy, batch[0].keypoints, batch[0].t);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(f, j)[c], 0.5 * static_cast<double>(3 * j + c));
    }
  }
}

TEST(Mlp, FramesAreIndependent) {
  std::mt19937_64 gen(2);
  const DenoiserParams p = DenoiserParams::initialize(small_config(), 2);
  auto batch = random_batch(gen, 1, 3);
  const PoseSeq3D before = mlp_forward(p, batch[0].noisy, batch[0].keypoints, 7);
  batch[0].noisy.at(1, 0) += Eigen::Vector3d(1, 1, 1);
  const PoseSeq3D after = mlp_forward(p, batch[0].noisy, batch[0].keypoints, 7);
  EXPECT_EQ(before.at(0, 2), after.at(0, 2));
  EXPECT_NE(before.at(1, 2), after.at(1, 2));
}

TEST(Mlp, InitializationIsSeeded) {
  const auto a = DenoiserParams::initialize(small_config(), 5);
  EXPECT_EQ(a, DenoiserParams::initialize(small_config(), 5));
  EXPECT_FALSE(a == DenoiserParams::initialize(small_config(), 6));
  EXPECT_TRUE(a.all_finite());
}

TEST(LossMse, Examples) {
  const HypothesisSet pred({PoseSeq3D(1, 1, {0, 0, 0}), PoseSeq3D(1, 1, {2, 2, 2})});
  EXPECT_DOUBLE_EQ(loss_mse(pred, PoseSeq3D(1, 1, {1, 1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(loss_mse(HypothesisSet({PoseSeq3D(1, 1, {1, 1, 1})}), PoseSeq3D(1, 1, {1, 1, 1})), 0.0);
}

TEST(GradLoss, MatchesFiniteDifferences) {
  check_gradient(small_config(), 11);
  check_gradient(small_config(4), 12);
}

TEST(GradLoss, LossOutputAgreesWithForward) {
  std::mt19937_64 gen(3);
  const DenoiserParams p = DenoiserParams::initialize(small_config(), 3);
  const auto batch = random_batch(gen, 4, 3);
  double loss = -1.0;
  grad_loss(p, batch, &loss);
  EXPECT_NEAR(loss, batch_loss(p, batch), 1e-12 * loss);
}

TEST(GradLoss, DuplicatedExampleHasSameGradient) {
  std::mt19937_64 gen(4);
  const DenoiserParams p = DenoiserParams::initialize(small_config(), 4);
  const auto one = random_batch(gen, 1, 3);
  const std::vector<TrainingExample> two{one[0], one[0]};
  const DenoiserParams g1 = grad_loss(p, one), g2 = grad_loss(p, two);
  for (std::size_t i = 0; i < g1.parameter_count(); ++i) {
    EXPECT_NEAR(g1.flat()[i], g2.flat()[i], 1e-12 * std::max(1.0, std::abs(g1.flat()[i])));
  }
}

TEST(GradLoss, ZeroInputsGiveZeroFirstLayerWeightGradient) {
  DenoiserParams p = DenoiserParams::initialize(small_config(), 5);
  TrainingExample e;
  e.noisy = PoseSeq3D(1, 3);
  e.keypoints = PoseSeq2D(1, 3, std::vector<double>(6, 500.0));  // normalizes to zero
  e.t = 0;
  e.target = PoseSeq3D(1, 3, std::vector<double>(9, 1.0));
  const std::vector<TrainingExample> batch{e};
  const DenoiserParams g = grad_loss(p, batch);
  EXPECT_EQ(g.weight(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(g.bias(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradLoss, NonFiniteActivationNamesLayer) {
  DenoiserParams p = DenoiserParams::initialize(small_config(), 6);
  p.weight(1)(0, 0) = std::numeric_limits<double>::infinity();
  std::mt19937_64 gen(6);
  const auto batch = random_batch(gen, 1, 3);
  try {
    grad_loss(p, batch);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_GE(e.layer(), 1u);
  }
}

TEST(AdamW, ZeroLearningRateLeavesParameters) {
  const auto init = DenoiserParams::initialize(small_config(), 7);
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.learning_rate = 0.0;
  const auto result = train(single_pair_dataset(), init, cfg, make_cosine_schedule(1000));
  EXPECT_EQ(result.params, init);
  EXPECT_EQ(result.loss_history.size(), 20u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps) after decay.
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.5;
  AdamW opt(2, cfg);
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{3.0, -0.5};
  opt.step(p, g);
  EXPECT_NEAR(p[0], 1.0 * (1 - 0.005) - 0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], -2.0 * (1 - 0.005) + 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(opt.steps_taken(), 1u);
}

TEST(Train, OverfitsSingleExample) {
  // One sample repeated to fill a default batch of 32.
  MlpConfig mc;
  mc.joints = 3;
  TrainConfig cfg;
  cfg.steps = 5000;
  cfg.seed = 3;
  const std::vector<TrainingPair> repeated(cfg.batch_size, single_pair_dataset()[0]);
  const auto result = train(repeated, DenoiserParams::initialize(mc, 3), cfg, make_cosine_schedule(1000));
  ASSERT_EQ(result.loss_history.size(), 5000u);
  double tail = 0.0;
  for (std::size_t i = result.loss_history.size() - 100; i < result.loss_history.size(); ++i) {
    tail += result.loss_history[i] / 100.0;
  }
  EXPECT_LT(tail, 1e-3);
  EXPECT_LT(result.loss_history.back(), 1e-3);
}

TEST(Train, IsDeterministic) {
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 4;
  cfg.seed = 9;
  const auto init = DenoiserParams::initialize(small_config(), 9);
  const auto a = train(single_pair_dataset(), init, cfg, make_cosine_schedule(1000));
  const auto b = train(single_pair_dataset(), init, cfg, make_cosine_schedule(1000));
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loss_history, b.loss_history);
  cfg.seed = 10;
  EXPECT_NE(train(single_pair_dataset(), init, cfg, make_cosine_schedule(1000)).loss_history, a.loss_history);
}

TEST(Train, DivergenceRaisesTrainingFailure) {
  auto init = DenoiserParams::initialize(small_config(), 1);
  for (double& v : init.flat()) v = 1e200;
  TrainConfig cfg;
  cfg.steps = 5;
  EXPECT_THROW(train(single_pair_dataset(), init, cfg, make_cosine_schedule(1000)), TrainingFailure);
  EXPECT_THROW(train({}, init, cfg, make_cosine_schedule(1000)), InvalidArgument);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  MlpConfig mc = small_config(4);
  mc.target = RegressionTarget::kPredictEps;
  mc.keypoint_center_u = 512.5;
  const auto p = DenoiserParams::initialize(mc, 21);
  std::stringstream buf;
  write_checkpoint(p, {2.5, 100}, buf);
  CheckpointInfo info;
  const auto back = read_checkpoint(buf, &info);
  EXPECT_EQ(back, p);
  EXPECT_EQ(back.config().target, RegressionTarget::kPredictEps);
  EXPECT_EQ(back.config().keypoint_center_u, 512.5);
  EXPECT_EQ(info.signal_scale, 2.5);
  EXPECT_EQ(info.t_max, 100);

  testing_support::TempDir dir("ckpt");
  save_checkpoint(p, {}, dir.path() / "c.bin");
  EXPECT_EQ(load_checkpoint(dir.path() / "c.bin"), p);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.bin"), InvalidArgument);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto p = DenoiserParams::initialize(small_config(), 22);
  std::stringstream buf;
  write_checkpoint(p, {}, buf);
  const std::string good = buf.str();

  std::istringstream truncated(good.substr(0, good.size() - 4));
  EXPECT_THROW(read_checkpoint(truncated), SchemaError);
  std::istringstream trailing(good + "x");
  EXPECT_THROW(read_checkpoint(trailing), SchemaError);
  std::istringstream garbage("not json\n");
  EXPECT_THROW(read_checkpoint(garbage), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_checkpoint(empty), ParseError);
}

TEST(MlpDenoiser, EpsTargetConvertsToCleanEstimate) {
  MlpConfig mc = small_config();
  mc.target = RegressionTarget::kPredictEps;
  const auto p = DenoiserParams::initialize(mc, 23);
  const NoiseSchedule s = make_cosine_schedule(1000);
  std::mt19937_64 gen(23);
  const auto batch = random_batch(gen, 1, 3);
  const MlpDenoiser d(p, s);
  const PoseSeq3D eps = mlp_forward(p, batch[0].noisy, batch[0].keypoints, 300);
  const PoseSeq3D y0 = d.predict(batch[0].noisy, batch[0].keypoints, 300, {});
  EXPECT_LT(testing_support::max_abs_diff(y0, eps_to_y0(batch[0].noisy, eps, 300, s)), 1e-12);
}
