#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poselift/denoiser.hpp"
#include "poselift/rng.hpp"
#include "poselift/schedule.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

enum class SigmaMode {
  kPaper,          // sigma_t = sqrt((1 - abar') / (1 - abar)) * sqrt(1 - abar / abar')
  kDeterministic,  // sigma_t = 0
};

enum class FlipMode {
  kNone,
  kOnce,       // two independent chains (original, mirrored), outputs averaged at the end
  kDiffusion,  // mirrored prediction averaged in at every iteration
};

std::string to_string(SigmaMode mode);
std::string to_string(FlipMode mode);
SigmaMode parse_sigma_mode(const std::string& name);
FlipMode parse_flip_mode(const std::string& name);

struct SamplerConfig {
  std::size_t hypotheses = 20;
  std::size_t iterations = 10;
  int t_max = 1000;
  SigmaMode sigma_mode = SigmaMode::kPaper;
  FlipMode flip = FlipMode::kNone;
  std::uint64_t seed = 0;
  double signal_scale = kDefaultSignalScale;
  /// Fan hypotheses out over threads. Results are identical either way.
  bool parallel = false;

  void validate() const;
};

/// t_k = T * (1 - k / K) for k in [0, K), rounded to nearest (ties upward).
std::vector<int> timestep_ladder(int t_max, std::size_t iterations);

/// Stochasticity of the step t -> t_next.
double ddim_sigma(int t, int t_next, const NoiseSchedule& schedule, SigmaMode mode);

struct DdimDiagnostics {
  /// Steps where 1 - abar' - sigma^2 rounded below zero and was clamped.
  std::size_t clamped = 0;
};

/// One reverse step: recover eps_t from (y_t, y0_hat), then
/// y_t' = sqrt(abar') y0_hat + sqrt(1 - abar' - sigma^2) eps_t + sigma * eps.
/// Fresh noise comes from `rng` (nothing is drawn in deterministic mode).
PoseSeq3D ddim_step(const PoseSeq3D& noisy, const PoseSeq3D& y0_hat, int t, int t_next, const NoiseSchedule& schedule,
                    SigmaMode mode, RngStream& rng, DdimDiagnostics* diagnostics = nullptr);

/// Steps every hypothesis with its own stream.
HypothesisSet ddim_step(const HypothesisSet& noisy, const HypothesisSet& y0_hat, int t, int t_next,
                        const NoiseSchedule& schedule, SigmaMode mode, std::span<RngStream> rngs,
                        DdimDiagnostics* diagnostics = nullptr);

/// Clean-pose estimates (millimeters) after each iteration, for inspection.
struct SampleTrace {
  std::vector<int> timesteps;
  std::vector<HypothesisSet> estimates;
  DdimDiagnostics diagnostics;
};

/// Generates H hypotheses for the 2D observation. Each hypothesis starts from
/// unit Gaussian noise drawn from its own stream; each iteration denoises and,
/// except after the last, takes a DDIM step to the next ladder timestep. The
/// result is the final denoiser output converted to millimeters.
HypothesisSet sample(const PoseSeq2D& keypoints, const Denoiser& denoiser, const SamplerConfig& config,
                     const NoiseSchedule& schedule, SampleTrace* trace = nullptr);

/// sample() with horizontal-flip test-time augmentation per config.flip.
/// Flip mode none is plain sample(). Other modes need a skeleton with mirror
/// pairs; keypoints are mirrored about image_width / 2.
HypothesisSet sample_flipped(const PoseSeq2D& keypoints, const Denoiser& denoiser, const SamplerConfig& config,
                             const NoiseSchedule& schedule, const Skeleton& skeleton, double image_width,
                             SampleTrace* trace = nullptr);

/// Writes hypothesis_XXX.jsonl per hypothesis plus an index.json manifest.
void save_hypotheses(const HypothesisSet& hypotheses, const std::filesystem::path& dir);
HypothesisSet load_hypotheses(const std::filesystem::path& dir);

}  // namespace poselift
