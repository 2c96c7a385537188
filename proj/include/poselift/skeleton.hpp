#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "poselift/pose.hpp"

namespace poselift {

/// Kinematic tree with left/right mirror pairs. The root's parent is kNoParent.
///
/// rest_directions are optional unit vectors (one per joint, root ignored)
/// giving each bone's direction in the parent frame of the neutral pose. When
/// absent, synthetic data generation falls back to a generic downward layout.
class Skeleton {
 public:
  static constexpr int kNoParent = -1;

  Skeleton(std::vector<int> parents, std::vector<std::pair<int, int>> mirror_pairs,
           std::vector<double> bone_lengths, std::vector<Eigen::Vector3d> rest_directions = {});

  /// 17-joint Human3.6M topology rooted at the pelvis.
  static Skeleton h36m();

  std::size_t num_joints() const { return parents_.size(); }
  std::size_t root() const { return root_; }
  int parent(std::size_t joint) const { return parents_[joint]; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<std::pair<int, int>>& mirror_pairs() const { return mirror_pairs_; }
  const std::vector<double>& bone_lengths() const { return bone_lengths_; }
  const std::vector<Eigen::Vector3d>& rest_directions() const { return rest_directions_; }

  /// Joint order in which every parent precedes its children.
  const std::vector<std::size_t>& topological_order() const { return order_; }

  /// Mirror partner of each joint (itself when unpaired).
  const std::vector<std::size_t>& mirror_map() const { return mirror_map_; }

  /// Longest root-to-leaf path length in mm.
  double reach() const;

  bool operator==(const Skeleton& other) const;

 private:
  std::vector<int> parents_;
  std::vector<std::pair<int, int>> mirror_pairs_;
  std::vector<double> bone_lengths_;
  std::vector<Eigen::Vector3d> rest_directions_;
  std::size_t root_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> mirror_map_;
};

Skeleton load_skeleton(const std::filesystem::path& path);
void save_skeleton(const Skeleton& skeleton, const std::filesystem::path& path);
Skeleton skeleton_from_json_text(const std::string& text);
std::string skeleton_to_json_text(const Skeleton& skeleton);

/// Horizontal flip in camera space: X negated, mirror-paired joints swapped.
PoseSeq3D flip_pose3d(const PoseSeq3D& pose, const Skeleton& skeleton);

/// Horizontal image flip: u -> image_width - u, mirror-paired keypoints swapped.
PoseSeq2D flip_pose2d(const PoseSeq2D& pose, const Skeleton& skeleton, double image_width);

}  // namespace poselift
