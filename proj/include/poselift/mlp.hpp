#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "poselift/denoiser.hpp"
#include "poselift/schedule.hpp"

namespace poselift {

struct MlpConfig {
  std::size_t joints = 17;
  std::size_t hidden_width = 128;
  std::size_t hidden_layers = 2;
  /// 0 selects hidden_width. A different value adds a learned projection.
  std::size_t embed_dim = 0;
  RegressionTarget target = RegressionTarget::kPredictY0;
  /// 2D keypoints enter the network as (u - center) / scale.
  double keypoint_center_u = 500.0;
  double keypoint_center_v = 500.0;
  double keypoint_scale = 1000.0;
};

/// Weights of the per-frame MLP denoiser, stored in one flat buffer so the
/// optimizer and finite-difference checks can treat them as a vector.
///
/// Per frame the input is the per-joint concatenation (y_t[j] || x[j]), a
/// J*5 vector. The timestep embedding is added to the first hidden
/// pre-activation; hidden layers use SiLU; the last layer is linear with J*3
/// outputs.
class DenoiserParams {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  /// All-zero parameters.
  explicit DenoiserParams(const MlpConfig& config);

  /// LeCun-normal weights, zero biases.
  static DenoiserParams initialize(const MlpConfig& config, std::uint64_t seed);

  const MlpConfig& config() const { return config_; }
  std::size_t input_dim() const { return config_.joints * 5; }
  std::size_t output_dim() const { return config_.joints * 3; }
  std::size_t embed_dim() const { return config_.embed_dim; }
  /// Number of affine layers (hidden layers + output layer).
  std::size_t layer_count() const { return config_.hidden_layers + 1; }
  bool has_embed_projection() const { return config_.embed_dim != config_.hidden_width; }

  MatrixMap weight(std::size_t layer);
  ConstMatrixMap weight(std::size_t layer) const;
  VectorMap bias(std::size_t layer);
  ConstVectorMap bias(std::size_t layer) const;
  /// hidden_width x embed_dim; only valid when has_embed_projection().
  MatrixMap embed_projection();
  ConstMatrixMap embed_projection() const;

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::size_t parameter_count() const { return values_.size(); }

  bool all_finite() const;
  bool operator==(const DenoiserParams& other) const;

 private:
  struct Block {
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
  };

  MlpConfig config_;
  std::vector<Block> weights_;
  std::vector<Block> biases_;
  Block projection_{0, 0, 0};
  std::vector<double> values_;
};

/// Raw network output for one sequence (y0 or eps, per the target), J*3 per frame.
PoseSeq3D mlp_forward(const DenoiserParams& params, const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t);

/// Denoiser backed by trained parameters. Converts eps predictions to y0.
class MlpDenoiser final : public Denoiser {
 public:
  MlpDenoiser(DenoiserParams params, NoiseSchedule schedule)
      : params_(std::move(params)), schedule_(std::move(schedule)) {}

  PoseSeq3D predict(const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t,
                    const DenoiseCall& call) const override;

  const DenoiserParams& params() const { return params_; }

 private:
  DenoiserParams params_;
  NoiseSchedule schedule_;
};

/// Clean-signal estimates for every hypothesis; `target` decides how the raw
/// output is interpreted.
HypothesisSet denoise(const HypothesisSet& noisy, const PoseSeq2D& keypoints, int t, const DenoiserParams& model,
                      RegressionTarget target, const NoiseSchedule& schedule);

/// Mean squared difference over hypotheses, frames, joints and coordinates.
double loss_mse(const HypothesisSet& pred, const PoseSeq3D& gt);

/// One supervised example: network input and the raw output it should produce.
struct TrainingExample {
  PoseSeq3D noisy;
  PoseSeq2D keypoints;
  int t = 0;
  PoseSeq3D target;
};

/// Mean squared error of the raw network output over a batch.
double batch_loss(const DenoiserParams& params, std::span<const TrainingExample> batch);

/// Exact gradient of batch_loss with respect to every parameter, returned in
/// the same layout as the parameters. `loss` receives the batch loss.
/// Throws NumericError naming the layer when an activation is not finite.
DenoiserParams grad_loss(const DenoiserParams& params, std::span<const TrainingExample> batch,
                         double* loss = nullptr);

}  // namespace poselift
