#include "poselift/metrics.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace poselift {

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

Points frame_points(const PoseSeq3D& pose, std::size_t frame) {
  Points m(static_cast<Eigen::Index>(pose.joints()), 3);
  for (std::size_t j = 0; j < pose.joints(); ++j) m.row(static_cast<Eigen::Index>(j)) = pose.at(frame, j).transpose();
  return m;
}

// Joints are collinear when the centered cloud has (numerically) rank < 2.
bool collinear(const Points& centered) {
  const Eigen::JacobiSVD<Points> svd(centered);
  const auto& s = svd.singularValues();
  return !(s(0) > 0.0) || s(1) <= 1e-9 * s(0);
}

}  // namespace

std::vector<double> joint_errors(const PoseSeq3D& pred, const PoseSeq3D& gt) {
  require_same_layout(pred, gt, "joint_errors");
  std::vector<double> out;
  out.reserve(pred.frames() * pred.joints());
  for (std::size_t n = 0; n < pred.frames(); ++n) {
    for (std::size_t j = 0; j < pred.joints(); ++j) out.push_back((pred.at(n, j) - gt.at(n, j)).norm());
  }
  return out;
}

double frame_error_sum(const PoseSeq3D& pred, const PoseSeq3D& gt, std::size_t frame) {
  double sum = 0.0;
  for (std::size_t j = 0; j < pred.joints(); ++j) sum += (pred.at(frame, j) - gt.at(frame, j)).norm();
  return sum;
}

double mpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt) {
  require_same_layout(pred, gt, "mpjpe");
  if (pred.empty()) throw ShapeError("mpjpe: empty poses");
  double total = 0.0;
  for (std::size_t n = 0; n < pred.frames(); ++n) total += frame_error_sum(pred, gt, n);
  return total / static_cast<double>(pred.frames() * pred.joints());
}

PoseSeq3D procrustes_align(const PoseSeq3D& pred, const PoseSeq3D& gt, AlignmentMode mode) {
  require_same_layout(pred, gt, "procrustes_align");
  if (pred.joints() < 3) throw DegenerateAlignment("alignment needs at least 3 joints per frame");
  PoseSeq3D out(pred.frames(), pred.joints());
  for (std::size_t n = 0; n < pred.frames(); ++n) {
    const Points p = frame_points(pred, n);
    const Points g = frame_points(gt, n);
    const Eigen::RowVector3d mu_p = p.colwise().mean();
    const Eigen::RowVector3d mu_g = g.colwise().mean();
    const Points pc = p.rowwise() - mu_p;
    const Points gc = g.rowwise() - mu_g;
    if (collinear(gc) || collinear(pc)) {
      throw DegenerateAlignment("frame " + std::to_string(n) + ": joints are collinear");
    }

    // Maximize tr(R * sum p_i g_i^T) over proper rotations.
    const Eigen::Matrix3d cross = pc.transpose() * gc;
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Vector3d signs(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
    const Eigen::Matrix3d rotation = v * signs.asDiagonal() * u.transpose();

    double scale = 1.0;
    if (mode == AlignmentMode::kSimilarity) {
      scale = svd.singularValues().dot(signs) / pc.squaredNorm();
    }
    const Points aligned = ((scale * pc * rotation.transpose()).rowwise() + mu_g);
    for (std::size_t j = 0; j < pred.joints(); ++j) {
      out.at(n, j) = aligned.row(static_cast<Eigen::Index>(j)).transpose();
    }
  }
  return out;
}

double pmpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt, AlignmentMode mode) {
  return mpjpe(procrustes_align(pred, gt, mode), gt);
}

double pck_from_errors(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw ShapeError("pck: no joints");
  std::size_t hits = 0;
  for (double e : errors) {
    if (threshold == 0.0 ? e == 0.0 : e < threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double pck(const PoseSeq3D& pred, const PoseSeq3D& gt, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("pck threshold must be positive");
  return pck_from_errors(joint_errors(pred, gt), threshold);
}

std::vector<double> auc_thresholds() {
  std::vector<double> grid;
  for (int mm = 0; mm <= 150; mm += 5) grid.push_back(mm);
  return grid;
}

double auc_from_errors(const std::vector<double>& errors) {
  const auto grid = auc_thresholds();
  double sum = 0.0;
  for (double threshold : grid) sum += pck_from_errors(errors, threshold);
  return sum / static_cast<double>(grid.size());
}

double auc(const PoseSeq3D& pred, const PoseSeq3D& gt) { return auc_from_errors(joint_errors(pred, gt)); }

MetricReport evaluate(const PoseSeq3D& pred, const PoseSeq3D& gt, const MetricOptions& options) {
  if (!(options.pck_threshold > 0.0)) throw InvalidArgument("pck threshold must be positive");
  const auto errors = joint_errors(pred, gt);
  const PoseSeq3D aligned = procrustes_align(pred, gt, options.alignment);
  const auto aligned_errors = joint_errors(aligned, gt);

  MetricReport report;
  report.mpjpe = mpjpe(pred, gt);
  report.pmpjpe = mpjpe(aligned, gt);
  report.pck = pck_from_errors(errors, options.pck_threshold);
  report.auc = auc_from_errors(errors);
  const std::size_t joints = pred.joints();
  for (std::size_t n = 0; n < pred.frames(); ++n) {
    FrameMetrics fm;
    for (std::size_t j = 0; j < joints; ++j) {
      fm.mpjpe += errors[n * joints + j];
      fm.pmpjpe += aligned_errors[n * joints + j];
    }
    fm.mpjpe /= static_cast<double>(joints);
    fm.pmpjpe /= static_cast<double>(joints);
    report.per_frame.push_back(fm);
  }
  return report;
}

}  // namespace poselift
