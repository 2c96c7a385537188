#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "poselift/pose.hpp"

namespace poselift {

enum class CameraModel { kPinhole, kDistorted };

/// Intrinsics in pixels. The pinhole model (4 parameters) requires all five
/// distortion coefficients to be zero; the distorted model uses all 9.
struct CameraIntrinsics {
  CameraModel model = CameraModel::kPinhole;
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 500.0;
  double cy = 500.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;

  /// Horizontal flips reflect about the principal point.
  double image_width() const { return 2.0 * cx; }

  bool operator==(const CameraIntrinsics&) const = default;
};

inline constexpr double kDefaultMinDepth = 1.0;  // mm

/// Reprojects one camera-space point. Returns nullopt when Z <= min_depth.
///
/// The distorted model is evaluated as
///   r^2 = X'^2 + Y'^2, d_r = 1 + k1 r^2 + k2 r^4 + k3 r^6, d_t = 2 p1 X'^2 + 2 p2 Y'^2,
///   X_d = X' (d_r + d_t) + p1 r^2,  Y_d = Y' (d_r + d_t) + p2 r^2.
/// Note the tangential term differs from the usual Brown-Conrady form; this is
/// intentional and matches the reference formulation.
std::optional<Eigen::Vector2d> try_project_point(const Eigen::Vector3d& point, const CameraIntrinsics& cam,
                                                 double min_depth = kDefaultMinDepth);

/// Reprojects every joint; throws BehindCamera for the first joint at Z <= min_depth.
PoseSeq2D project(const PoseSeq3D& pose, const CameraIntrinsics& cam, double min_depth = kDefaultMinDepth);

/// Point at depth `depth` on the pinhole ray through pixel (u, v).
Eigen::Vector3d ray_point(double u, double v, double depth, const CameraIntrinsics& cam);

CameraIntrinsics camera_from_json_text(const std::string& text);
std::string camera_to_json_text(const CameraIntrinsics& cam);
CameraIntrinsics load_camera(const std::filesystem::path& path);
void save_camera(const CameraIntrinsics& cam, const std::filesystem::path& path);

}  // namespace poselift
