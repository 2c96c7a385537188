#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poselift/camera.hpp"
#include "poselift/pose.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

enum class HypothesisModelKind { kIidGaussian, kDepthRay, kBimodal };

std::string to_string(HypothesisModelKind kind);
HypothesisModelKind parse_hypothesis_model(const std::string& name);

/// How synthetic hypothesis clouds scatter around the ground truth.
struct HypothesisModel {
  HypothesisModelKind kind = HypothesisModelKind::kIidGaussian;
  double sigma_mm = 20.0;     // iid_gaussian: per-axis std
  double sigma_ray = 50.0;    // depth_ray: along the camera ray
  double sigma_perp = 5.0;    // depth_ray: perpendicular to the ray
  double offset_mm = 150.0;   // bimodal: displacement of a wrong joint
  double p_wrong = 0.3;       // bimodal: probability a joint is displaced
  double sigma_small = 5.0;   // bimodal: per-axis std of a correct joint
};

struct ScenarioConfig {
  Skeleton skeleton = Skeleton::h36m();
  CameraIntrinsics camera;
  std::size_t poses = 100;
  std::size_t frames = 1;
  double pixel_noise = 0.0;
  /// Each joint's local Euler angles are uniform in [-angle_range, angle_range] (radians).
  double angle_range = 0.4;
  /// Root yaw about the camera's vertical axis, uniform in [-yaw_range, yaw_range].
  double yaw_range = 3.14159265358979323846;
  /// Root position box in camera space (mm).
  Eigen::Vector3d root_min{-300.0, -200.0, 4000.0};
  Eigen::Vector3d root_max{300.0, 200.0, 6000.0};
  std::size_t hypotheses = 20;
  HypothesisModel model;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on negative sigmas, probabilities outside [0, 1],
  /// an inverted box, or a box that lets any joint reach behind the camera.
  void validate() const;
};

struct SyntheticSample {
  PoseSeq3D gt;      // camera-space millimeters
  PoseSeq2D keypoints;
};

/// Samples joint angles, runs forward kinematics with the skeleton's bone
/// lengths, places the root in the box and projects with optional pixel noise.
/// Sample i depends only on (seed, i).
std::vector<SyntheticSample> gen_poses(const ScenarioConfig& config);

/// cfg.hypotheses candidates scattered around gt per cfg.model. `index`
/// selects an independent stream so scenarios sharing a seed differ.
HypothesisSet gen_hypotheses(const PoseSeq3D& gt, const ScenarioConfig& config, std::uint64_t index = 0);

/// Scenario manifest (everything but the skeleton and camera, which are
/// stored in their own files).
std::string scenario_to_json_text(const ScenarioConfig& config);
/// Fills `config` from a manifest; keys that are absent keep their values.
void scenario_from_json_text(const std::string& text, ScenarioConfig& config);

/// Dataset directory: scenario.json, skeleton.json, camera.json, gt.jsonl and
/// keypoints.jsonl (samples concatenated along frames).
void save_dataset(const std::vector<SyntheticSample>& samples, const ScenarioConfig& config,
                  const std::filesystem::path& dir);
std::vector<SyntheticSample> load_dataset(const std::filesystem::path& dir, ScenarioConfig* config = nullptr);

}  // namespace poselift
