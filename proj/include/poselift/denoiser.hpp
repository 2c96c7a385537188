#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "poselift/pose.hpp"
#include "poselift/schedule.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

enum class RegressionTarget { kPredictY0, kPredictEps };

/// Identifies one denoiser evaluation inside a sampling run. Learned models
/// ignore it; the test oracles use it to key their randomness and to know
/// whether the inputs were mirrored.
struct DenoiseCall {
  std::size_t hypothesis = 0;
  std::size_t iteration = 0;
  bool flipped = false;
};

/// Maps (noisy signal y_t, 2D keypoints x, timestep t) to an estimate of the
/// clean signal, all 3D values in scaled diffusion units.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual PoseSeq3D predict(const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t,
                            const DenoiseCall& call) const = 0;
};

/// Sinusoidal embedding: entry 2i = sin(t / 10000^(2i/d)), entry 2i+1 = cos(...).
Eigen::VectorXd timestep_embed(int t, std::size_t dim);

/// y0 = (y_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t).
PoseSeq3D eps_to_y0(const PoseSeq3D& noisy, const PoseSeq3D& eps, int t, const NoiseSchedule& schedule);
/// eps = (y_t - sqrt(abar_t) * y0) / sqrt(1 - abar_t). Requires t >= 1.
PoseSeq3D y0_to_eps(const PoseSeq3D& noisy, const PoseSeq3D& y0, int t, const NoiseSchedule& schedule);

/// Runs `model` on every hypothesis at timestep t.
HypothesisSet denoise(const HypothesisSet& noisy, const PoseSeq2D& keypoints, int t, const Denoiser& model,
                      std::size_t iteration = 0, bool flipped = false);

// Oracle denoisers for exercising the sampler without a trained model. They
// hold the ground truth in millimeters and answer in signal units. When given
// a skeleton they answer flipped calls with the mirrored ground truth.

/// Always returns the ground truth.
std::unique_ptr<Denoiser> oracle_perfect(const PoseSeq3D& gt_mm, SignalScaling scaling = {},
                                         std::optional<Skeleton> skeleton = std::nullopt);

/// Returns lambda * gt + (1 - lambda) * y_t. lambda in [0, 1).
std::unique_ptr<Denoiser> oracle_contractive(const PoseSeq3D& gt_mm, double lambda, SignalScaling scaling = {},
                                             std::optional<Skeleton> skeleton = std::nullopt);

/// Returns gt plus isotropic Gaussian noise per joint. `sigma_mm` holds one
/// value for all joints or one per joint. Noise for a call is drawn from the
/// stream keyed by (seed, hypothesis, flipped) at an offset set by the
/// iteration, so it does not depend on evaluation order.
std::unique_ptr<Denoiser> oracle_noisy(const PoseSeq3D& gt_mm, std::vector<double> sigma_mm, std::uint64_t seed,
                                       SignalScaling scaling = {}, std::optional<Skeleton> skeleton = std::nullopt);

}  // namespace poselift
