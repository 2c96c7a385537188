#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "poselift/mlp.hpp"
#include "poselift/schedule.hpp"

namespace poselift {

/// One (2D observation, 3D ground truth in millimeters) training pair.
struct TrainingPair {
  PoseSeq2D keypoints;
  PoseSeq3D pose_mm;
};

struct TrainConfig {
  std::size_t steps = 5000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.1;
  double adam_epsilon = 1e-8;
  double signal_scale = kDefaultSignalScale;
  std::uint64_t seed = 0;
};

/// Adaptive-moment optimizer with decoupled weight decay. Each step first
/// shrinks the parameters by (1 - lr * weight_decay), then applies the
/// bias-corrected Adam update.
class AdamW {
 public:
  AdamW(std::size_t parameter_count, const TrainConfig& config);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps_taken() const { return step_; }

 private:
  double lr_, beta1_, beta2_, weight_decay_, epsilon_;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::size_t step_ = 0;
};

struct TrainingResult {
  DenoiserParams params;
  std::vector<double> loss_history;
};

/// Per step: draw a batch without replacement (reshuffled every epoch), draw
/// t uniformly from [0, T_max] and unit Gaussian noise per example, diffuse
/// the scaled ground truth, regress the configured target, take one AdamW
/// step. The result depends only on the inputs and config.seed. Throws
/// TrainingFailure when the loss stops being finite.
TrainingResult train(const std::vector<TrainingPair>& dataset, DenoiserParams init, const TrainConfig& config,
                     const NoiseSchedule& schedule);

/// Loss history as CSV with columns step,loss.
void write_loss_csv(const std::vector<double>& history, std::ostream& out);

struct CheckpointInfo {
  double signal_scale = kDefaultSignalScale;
  int t_max = 1000;
};

/// Checkpoint layout: one JSON header line (shapes, target, embedding size,
/// keypoint normalization, signal scale, loss units, parameter count) then the
/// parameters as little-endian IEEE-754 doubles.
void write_checkpoint(const DenoiserParams& params, const CheckpointInfo& info, std::ostream& out);
DenoiserParams read_checkpoint(std::istream& in, CheckpointInfo* info = nullptr);
void save_checkpoint(const DenoiserParams& params, const CheckpointInfo& info, const std::filesystem::path& path);
DenoiserParams load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace poselift
