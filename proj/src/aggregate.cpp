#include "poselift/aggregate.hpp"

#include <limits>

#include "poselift/metrics.hpp"

namespace poselift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_keypoints(const HypothesisSet& hs, const PoseSeq2D& keypoints) {
  require_same_layout(hs[0], keypoints, "aggregation keypoints");
}

// Reprojection distance of hypothesis h at (frame, joint); +inf when behind the camera.
double reprojection_error(const HypothesisSet& hs, std::size_t h, std::size_t n, std::size_t j,
                          const PoseSeq2D& keypoints, const CameraIntrinsics& cam) {
  const auto uv = try_project_point(hs[h].at(n, j), cam);
  if (!uv) return kInf;
  return (*uv - keypoints.at(n, j)).norm();
}

void copy_joint(const PoseSeq3D& from, PoseSeq3D& to, std::size_t n, std::size_t j) { to.at(n, j) = from.at(n, j); }

}  // namespace

std::string to_string(Aggregator kind) {
  switch (kind) {
    case Aggregator::kAverage:
      return "avg";
    case Aggregator::kPpma:
      return "ppma";
    case Aggregator::kJpma:
      return "jpma";
    case Aggregator::kPbest:
      return "pbest";
    case Aggregator::kJbest:
      return "jbest";
  }
  return "unknown";
}

Aggregator parse_aggregator(const std::string& name) {
  if (name == "avg" || name == "average") return Aggregator::kAverage;
  if (name == "ppma") return Aggregator::kPpma;
  if (name == "jpma") return Aggregator::kJpma;
  if (name == "pbest") return Aggregator::kPbest;
  if (name == "jbest") return Aggregator::kJbest;
  throw InvalidArgument("unknown aggregator '" + name + "'");
}

bool requires_ground_truth(Aggregator kind) { return kind == Aggregator::kPbest || kind == Aggregator::kJbest; }

PoseSeq3D agg_average(const HypothesisSet& hs) {
  if (hs.count() == 0) throw AggregationError("cannot average an empty hypothesis set");
  PoseSeq3D out = hs[0];
  if (hs.count() == 1) return out;
  auto dst = out.values();
  for (std::size_t h = 1; h < hs.count(); ++h) {
    const auto src = hs[h].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const auto count = static_cast<double>(hs.count());
  for (double& v : dst) v /= count;
  return out;
}

AggregationReport agg_jpma(const HypothesisSet& hs, const PoseSeq2D& keypoints, const CameraIntrinsics& cam) {
  check_keypoints(hs, keypoints);
  AggregationReport report{PoseSeq3D(hs.frames(), hs.joints()), {}, {}};
  report.chosen.reserve(hs.frames() * hs.joints());
  report.errors.reserve(hs.frames() * hs.joints());
  for (std::size_t n = 0; n < hs.frames(); ++n) {
    for (std::size_t j = 0; j < hs.joints(); ++j) {
      int best = -1;
      double best_err = kInf;
      for (std::size_t h = 0; h < hs.count(); ++h) {
        const double err = reprojection_error(hs, h, n, j, keypoints, cam);
        if (err < best_err) {
          best_err = err;
          best = static_cast<int>(h);
        }
      }
      if (best < 0) {
        throw AggregationError("every hypothesis places joint " + std::to_string(j) + " of frame " +
                               std::to_string(n) + " behind the camera");
      }
      copy_joint(hs[static_cast<std::size_t>(best)], report.pose, n, j);
      report.chosen.push_back(best);
      report.errors.push_back(best_err);
    }
  }
  return report;
}

AggregationReport agg_ppma(const HypothesisSet& hs, const PoseSeq2D& keypoints, const CameraIntrinsics& cam) {
  check_keypoints(hs, keypoints);
  AggregationReport report{PoseSeq3D(hs.frames(), hs.joints()), {}, {}};
  std::vector<double> per_joint(hs.joints()), best_per_joint(hs.joints());
  for (std::size_t n = 0; n < hs.frames(); ++n) {
    int best = -1;
    double best_total = kInf;
    for (std::size_t h = 0; h < hs.count(); ++h) {
      double total = 0.0;
      for (std::size_t j = 0; j < hs.joints(); ++j) {
        per_joint[j] = reprojection_error(hs, h, n, j, keypoints, cam);
        total += per_joint[j];
      }
      if (total < best_total) {
        best_total = total;
        best = static_cast<int>(h);
        best_per_joint = per_joint;
      }
    }
    if (best < 0) {
      throw AggregationError("every hypothesis has a joint behind the camera in frame " + std::to_string(n));
    }
    for (std::size_t j = 0; j < hs.joints(); ++j) {
      copy_joint(hs[static_cast<std::size_t>(best)], report.pose, n, j);
      report.chosen.push_back(best);
      report.errors.push_back(best_per_joint[j]);
    }
  }
  return report;
}

AggregationReport agg_pbest(const HypothesisSet& hs, const PoseSeq3D& gt) {
  require_same_layout(hs[0], gt, "P-Best ground truth");
  AggregationReport report{PoseSeq3D(hs.frames(), hs.joints()), {}, {}};
  for (std::size_t n = 0; n < hs.frames(); ++n) {
    std::size_t best = 0;
    double best_sum = frame_error_sum(hs[0], gt, n);
    for (std::size_t h = 1; h < hs.count(); ++h) {
      const double sum = frame_error_sum(hs[h], gt, n);
      if (sum < best_sum) {
        best_sum = sum;
        best = h;
      }
    }
    for (std::size_t j = 0; j < hs.joints(); ++j) {
      copy_joint(hs[best], report.pose, n, j);
      report.chosen.push_back(static_cast<int>(best));
      report.errors.push_back((hs[best].at(n, j) - gt.at(n, j)).norm());
    }
  }
  return report;
}

AggregationReport agg_jbest(const HypothesisSet& hs, const PoseSeq3D& gt) {
  require_same_layout(hs[0], gt, "J-Best ground truth");
  AggregationReport report{PoseSeq3D(hs.frames(), hs.joints()), {}, {}};
  for (std::size_t n = 0; n < hs.frames(); ++n) {
    for (std::size_t j = 0; j < hs.joints(); ++j) {
      std::size_t best = 0;
      double best_err = (hs[0].at(n, j) - gt.at(n, j)).norm();
      for (std::size_t h = 1; h < hs.count(); ++h) {
        const double err = (hs[h].at(n, j) - gt.at(n, j)).norm();
        if (err < best_err) {
          best_err = err;
          best = h;
        }
      }
      copy_joint(hs[best], report.pose, n, j);
      report.chosen.push_back(static_cast<int>(best));
      report.errors.push_back(best_err);
    }
  }
  return report;
}

AggregationReport aggregate(Aggregator kind, const HypothesisSet& hs, const AggregationInputs& inputs) {
  const auto need_2d = [&] {
    if (inputs.keypoints == nullptr || inputs.camera == nullptr) {
      throw InvalidArgument(to_string(kind) + " needs 2D keypoints and camera intrinsics");
    }
  };
  const auto need_gt = [&] {
    if (inputs.gt == nullptr) throw MissingGroundTruth(to_string(kind) + " needs ground truth");
  };
  switch (kind) {
    case Aggregator::kAverage:
      return AggregationReport{agg_average(hs), {}, {}};
    case Aggregator::kPpma:
      need_2d();
      return agg_ppma(hs, *inputs.keypoints, *inputs.camera);
    case Aggregator::kJpma:
      need_2d();
      return agg_jpma(hs, *inputs.keypoints, *inputs.camera);
    case Aggregator::kPbest:
      need_gt();
      return agg_pbest(hs, *inputs.gt);
    case Aggregator::kJbest:
      need_gt();
      return agg_jbest(hs, *inputs.gt);
  }
  throw InvalidArgument("unknown aggregator");
}

}  // namespace poselift
