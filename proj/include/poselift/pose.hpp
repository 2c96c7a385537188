#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poselift/errors.hpp"

namespace poselift {

/// A sequence of N frames with J joints of `Dim` coordinates each, stored
/// frame-major in one contiguous buffer. Dim=3 is camera-space millimeters
/// (or normalized diffusion units inside the sampler), Dim=2 is pixels.
template <int Dim>
class PoseSeq {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;
  using PointMap = Eigen::Map<Point>;
  using ConstPointMap = Eigen::Map<const Point>;

  static constexpr int kDims = Dim;

  PoseSeq() = default;
  PoseSeq(std::size_t frames, std::size_t joints)
      : frames_(frames), joints_(joints), values_(frames * joints * Dim, 0.0) {}
  PoseSeq(std::size_t frames, std::size_t joints, std::vector<double> values)
      : frames_(frames), joints_(joints), values_(std::move(values)) {
    if (values_.size() != frames_ * joints_ * Dim) {
      throw ShapeError("pose buffer holds " + std::to_string(values_.size()) +
                       " values, expected " + std::to_string(frames_ * joints_ * Dim));
    }
  }

  std::size_t frames() const { return frames_; }
  std::size_t joints() const { return joints_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  PointMap at(std::size_t frame, std::size_t joint) {
    return PointMap(values_.data() + offset(frame, joint));
  }
  ConstPointMap at(std::size_t frame, std::size_t joint) const {
    return ConstPointMap(values_.data() + offset(frame, joint));
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const PoseSeq& other) const {
    return frames_ == other.frames_ && joints_ == other.joints_;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const PoseSeq& other) const = default;

 private:
  std::size_t offset(std::size_t frame, std::size_t joint) const {
    return (frame * joints_ + joint) * Dim;
  }

  std::size_t frames_ = 0;
  std::size_t joints_ = 0;
  std::vector<double> values_;
};

using PoseSeq3D = PoseSeq<3>;
using PoseSeq2D = PoseSeq<2>;

template <int DimA, int DimB>
void require_same_layout(const PoseSeq<DimA>& a, const PoseSeq<DimB>& b, const char* what) {
  if (a.frames() != b.frames() || a.joints() != b.joints()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.frames()) + "x" +
                     std::to_string(a.joints()) + " vs " + std::to_string(b.frames()) + "x" +
                     std::to_string(b.joints()) + ")");
  }
}

/// H candidate 3D sequences for one 2D observation.
class HypothesisSet {
 public:
  HypothesisSet() = default;
  explicit HypothesisSet(std::vector<PoseSeq3D> hypotheses);

  std::size_t count() const { return hypotheses_.size(); }
  std::size_t frames() const { return hypotheses_.front().frames(); }
  std::size_t joints() const { return hypotheses_.front().joints(); }

  const PoseSeq3D& operator[](std::size_t h) const { return hypotheses_[h]; }
  PoseSeq3D& operator[](std::size_t h) { return hypotheses_[h]; }

  const std::vector<PoseSeq3D>& hypotheses() const { return hypotheses_; }

  auto begin() const { return hypotheses_.begin(); }
  auto end() const { return hypotheses_.end(); }

  bool operator==(const HypothesisSet& other) const = default;

 private:
  std::vector<PoseSeq3D> hypotheses_;
};

}  // namespace poselift
