#pragma once

#include <vector>

#include "poselift/pose.hpp"

namespace poselift {

enum class AlignmentMode {
  kSimilarity,  // rotation + translation + uniform scale (default)
  kRigid,       // rotation + translation
};

inline constexpr double kDefaultPckThreshold = 150.0;  // mm

/// Euclidean error of every (frame, joint), frame-major.
std::vector<double> joint_errors(const PoseSeq3D& pred, const PoseSeq3D& gt);

/// Sum of joint errors in one frame, accumulated in joint order. mpjpe() and
/// the pose-level selectors share this so their comparisons agree bitwise.
double frame_error_sum(const PoseSeq3D& pred, const PoseSeq3D& gt, std::size_t frame);

/// Mean per-joint position error (mm): per-frame sums, then summed over frames.
double mpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt);

/// Per-frame orthogonal Procrustes alignment of pred onto gt. Reflections are
/// never used. Throws DegenerateAlignment when a frame's joints are collinear.
PoseSeq3D procrustes_align(const PoseSeq3D& pred, const PoseSeq3D& gt,
                           AlignmentMode mode = AlignmentMode::kSimilarity);

/// MPJPE after per-frame Procrustes alignment.
double pmpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt, AlignmentMode mode = AlignmentMode::kSimilarity);

/// Fraction of joints whose error is below `threshold` (mm). threshold > 0.
double pck(const PoseSeq3D& pred, const PoseSeq3D& gt, double threshold = kDefaultPckThreshold);

/// Thresholds 0, 5, ..., 150 mm. The 0 mm point counts exact matches only.
std::vector<double> auc_thresholds();

/// Mean PCK over auc_thresholds().
double auc(const PoseSeq3D& pred, const PoseSeq3D& gt);

/// Same grid evaluated on precomputed errors.
double pck_from_errors(const std::vector<double>& errors, double threshold);
double auc_from_errors(const std::vector<double>& errors);

struct FrameMetrics {
  double mpjpe = 0.0;
  double pmpjpe = 0.0;
};

struct MetricReport {
  double mpjpe = 0.0;
  double pmpjpe = 0.0;
  double pck = 0.0;
  double auc = 0.0;
  std::vector<FrameMetrics> per_frame;
};

struct MetricOptions {
  double pck_threshold = kDefaultPckThreshold;
  AlignmentMode alignment = AlignmentMode::kSimilarity;
};

MetricReport evaluate(const PoseSeq3D& pred, const PoseSeq3D& gt, const MetricOptions& options = {});

}  // namespace poselift
