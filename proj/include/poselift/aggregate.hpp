#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/pose.hpp"

namespace poselift {

enum class Aggregator { kAverage, kPpma, kJpma, kPbest, kJbest };

std::string to_string(Aggregator kind);
Aggregator parse_aggregator(const std::string& name);

/// Ground-truth selectors (P-Best, J-Best) are evaluation upper bounds only.
bool requires_ground_truth(Aggregator kind);

/// Result of combining H hypotheses into one pose.
///
/// For selecting aggregators `chosen` holds the hypothesis index of every
/// (frame, joint), frame-major, and `errors` the selection criterion of the
/// chosen joint: reprojection distance in pixels for PPMA/JPMA, 3D distance in
/// millimeters for P-Best/J-Best. Both are empty for averaging.
struct AggregationReport {
  PoseSeq3D pose;
  std::vector<int> chosen;
  std::vector<double> errors;
};

/// Elementwise mean over hypotheses.
PoseSeq3D agg_average(const HypothesisSet& hypotheses);

/// Joint-wise selection: per frame and joint, the hypothesis whose reprojection
/// lies closest to the observed keypoint. Ties go to the lowest index.
/// Hypotheses with the joint behind the camera are skipped for that joint.
AggregationReport agg_jpma(const HypothesisSet& hypotheses, const PoseSeq2D& keypoints,
                           const CameraIntrinsics& cam);

/// Pose-level selection: per frame, the hypothesis with the smallest summed
/// reprojection error over all joints.
AggregationReport agg_ppma(const HypothesisSet& hypotheses, const PoseSeq2D& keypoints,
                           const CameraIntrinsics& cam);

/// Per frame, the hypothesis with the lowest MPJPE against ground truth.
AggregationReport agg_pbest(const HypothesisSet& hypotheses, const PoseSeq3D& gt);

/// Per joint, the hypothesis closest to the ground-truth joint.
AggregationReport agg_jbest(const HypothesisSet& hypotheses, const PoseSeq3D& gt);

struct AggregationInputs {
  const PoseSeq2D* keypoints = nullptr;
  const CameraIntrinsics* camera = nullptr;
  const PoseSeq3D* gt = nullptr;
};

/// Dispatches on `kind`; throws InvalidArgument when a required input is missing.
AggregationReport aggregate(Aggregator kind, const HypothesisSet& hypotheses, const AggregationInputs& inputs);

}  // namespace poselift
