#include "poselift/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace poselift {

namespace {

using Json = nlohmann::json;

std::string joint_str(long v) { return std::to_string(v); }

}  // namespace

Skeleton::Skeleton(std::vector<int> parents, std::vector<std::pair<int, int>> mirror_pairs,
                   std::vector<double> bone_lengths, std::vector<Eigen::Vector3d> rest_directions)
    : parents_(std::move(parents)),
      mirror_pairs_(std::move(mirror_pairs)),
      bone_lengths_(std::move(bone_lengths)),
      rest_directions_(std::move(rest_directions)) {
  const auto n = static_cast<long>(parents_.size());
  if (n == 0) throw InvalidSkeleton("skeleton has no joints");
  if (bone_lengths_.size() != parents_.size()) {
    throw InvalidSkeleton("bone_lengths has " + std::to_string(bone_lengths_.size()) +
                          " entries for " + std::to_string(n) + " joints");
  }
  if (!rest_directions_.empty() && rest_directions_.size() != parents_.size()) {
    throw InvalidSkeleton("rest_directions must be empty or have one entry per joint");
  }

  // Exactly one root; a joint listing itself as parent is also accepted as root.
  long roots = 0;
  for (long j = 0; j < n; ++j) {
    int& p = parents_[j];
    if (p == j) p = kNoParent;
    if (p == kNoParent) {
      ++roots;
      root_ = static_cast<std::size_t>(j);
    } else if (p < 0 || p >= n) {
      throw InvalidSkeleton("parent of joint " + joint_str(j) + " out of range");
    }
  }
  if (roots != 1) throw InvalidSkeleton("skeleton must have exactly one root, found " + joint_str(roots));

  // Breadth-first from the root; anything unreached is part of a cycle.
  std::vector<std::vector<std::size_t>> children(parents_.size());
  for (long j = 0; j < n; ++j) {
    if (parents_[j] != kNoParent) children[parents_[j]].push_back(static_cast<std::size_t>(j));
  }
  order_.push_back(root_);
  for (std::size_t i = 0; i < order_.size(); ++i) {
    for (std::size_t c : children[order_[i]]) order_.push_back(c);
  }
  if (order_.size() != parents_.size()) throw InvalidSkeleton("parent links contain a cycle");

  for (long j = 0; j < n; ++j) {
    if (static_cast<std::size_t>(j) == root_) continue;
    if (!(bone_lengths_[j] > 0.0) || !std::isfinite(bone_lengths_[j])) {
      throw InvalidSkeleton("bone length of joint " + joint_str(j) + " must be positive");
    }
  }

  mirror_map_.resize(parents_.size());
  for (std::size_t j = 0; j < mirror_map_.size(); ++j) mirror_map_[j] = j;
  std::vector<bool> paired(parents_.size(), false);
  for (const auto& [l, r] : mirror_pairs_) {
    if (l < 0 || r < 0 || l >= n || r >= n) {
      throw InvalidSkeleton("mirror pair (" + joint_str(l) + ", " + joint_str(r) + ") out of range");
    }
    if (l == r || paired[l] || paired[r]) {
      throw InvalidSkeleton("joint appears in more than one mirror pair");
    }
    paired[l] = paired[r] = true;
    mirror_map_[l] = static_cast<std::size_t>(r);
    mirror_map_[r] = static_cast<std::size_t>(l);
  }

  for (auto& d : rest_directions_) {
    const double norm = d.norm();
    if (!(norm > 0.0)) throw InvalidSkeleton("rest direction must be nonzero");
    d /= norm;
  }
}

Skeleton Skeleton::h36m() {
  // 0 pelvis, 1-3 right leg, 4-6 left leg, 7 spine, 8 thorax, 9 neck, 10 head,
  // 11-13 left arm, 14-16 right arm. Camera convention: +X right, +Y down.
  std::vector<int> parents{kNoParent, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  std::vector<std::pair<int, int>> pairs{{4, 1}, {5, 2}, {6, 3}, {11, 14}, {12, 15}, {13, 16}};
  std::vector<double> lengths{0.0,   132.9, 442.9, 454.2, 132.9, 442.9, 454.2, 233.4, 257.1,
                              121.1, 115.0, 151.0, 278.9, 251.7, 151.0, 278.9, 251.7};
  std::vector<Eigen::Vector3d> rest{
      {0, -1, 0}, {-1, 0, 0}, {0, 1, 0},  {0, 1, 0},  {1, 0, 0},  {0, 1, 0},
      {0, 1, 0},  {0, -1, 0}, {0, -1, 0}, {0, -1, 0}, {0, -1, 0}, {1, 0, 0},
      {0, 1, 0},  {0, 1, 0},  {-1, 0, 0}, {0, 1, 0},  {0, 1, 0}};
  return Skeleton(std::move(parents), std::move(pairs), std::move(lengths), std::move(rest));
}

double Skeleton::reach() const {
  std::vector<double> depth(parents_.size(), 0.0);
  double best = 0.0;
  for (std::size_t j : order_) {
    if (parents_[j] != kNoParent) depth[j] = depth[parents_[j]] + bone_lengths_[j];
    best = std::max(best, depth[j]);
  }
  return best;
}

bool Skeleton::operator==(const Skeleton& other) const {
  return parents_ == other.parents_ && mirror_pairs_ == other.mirror_pairs_ &&
         bone_lengths_ == other.bone_lengths_ && rest_directions_ == other.rest_directions_;
}

Skeleton skeleton_from_json_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(1, std::string("skeleton JSON: ") + e.what());
  }
  try {
    const auto parents = doc.at("parents").get<std::vector<int>>();
    if (doc.contains("num_joints") && doc.at("num_joints").get<std::size_t>() != parents.size()) {
      throw SchemaError("skeleton num_joints disagrees with parents length");
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& p : doc.value("mirror_pairs", Json::array())) {
      if (!p.is_array() || p.size() != 2) throw SchemaError("mirror pair must be [left, right]");
      pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    auto lengths = doc.at("bone_lengths").get<std::vector<double>>();
    // Lengths may be listed for non-root joints only.
    if (lengths.size() + 1 == parents.size()) {
      std::size_t root = parents.size();
      for (std::size_t j = 0; j < parents.size() && root == parents.size(); ++j) {
        if (parents[j] == Skeleton::kNoParent || parents[j] == static_cast<int>(j)) root = j;
      }
      if (root == parents.size()) throw SchemaError("skeleton has no root");
      lengths.insert(lengths.begin() + static_cast<std::ptrdiff_t>(root), 0.0);
    }
    std::vector<Eigen::Vector3d> rest;
    if (doc.contains("rest_directions")) {
      for (const auto& d : doc.at("rest_directions")) {
        const auto v = d.get<std::vector<double>>();
        if (v.size() != 3) throw SchemaError("rest direction must have 3 components");
        rest.emplace_back(v[0], v[1], v[2]);
      }
    }
    return Skeleton(parents, std::move(pairs), std::move(lengths), std::move(rest));
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("skeleton JSON: ") + e.what());
  }
}

std::string skeleton_to_json_text(const Skeleton& skeleton) {
  Json doc;
  doc["num_joints"] = skeleton.num_joints();
  doc["parents"] = skeleton.parents();
  Json pairs = Json::array();
  for (const auto& [l, r] : skeleton.mirror_pairs()) pairs.push_back({l, r});
  doc["mirror_pairs"] = pairs;
  doc["bone_lengths"] = skeleton.bone_lengths();
  if (!skeleton.rest_directions().empty()) {
    Json rest = Json::array();
    for (const auto& d : skeleton.rest_directions()) rest.push_back({d.x(), d.y(), d.z()});
    doc["rest_directions"] = rest;
  }
  return doc.dump(2);
}

Skeleton load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open skeleton file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return skeleton_from_json_text(buffer.str());
}

void save_skeleton(const Skeleton& skeleton, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write skeleton file " + path.string());
  out << skeleton_to_json_text(skeleton) << '\n';
}

namespace {

template <int Dim>
void check_joint_count(const PoseSeq<Dim>& pose, const Skeleton& skeleton) {
  if (pose.joints() != skeleton.num_joints()) {
    throw ShapeError("pose has " + std::to_string(pose.joints()) + " joints, skeleton has " +
                     std::to_string(skeleton.num_joints()));
  }
}

}  // namespace

PoseSeq3D flip_pose3d(const PoseSeq3D& pose, const Skeleton& skeleton) {
  check_joint_count(pose, skeleton);
  const auto& mirror = skeleton.mirror_map();
  PoseSeq3D out(pose.frames(), pose.joints());
  for (std::size_t n = 0; n < pose.frames(); ++n) {
    for (std::size_t j = 0; j < pose.joints(); ++j) {
      auto src = pose.at(n, mirror[j]);
      auto dst = out.at(n, j);
      dst.x() = -src.x();
      dst.y() = src.y();
      dst.z() = src.z();
    }
  }
  return out;
}

PoseSeq2D flip_pose2d(const PoseSeq2D& pose, const Skeleton& skeleton, double image_width) {
  if (!(image_width > 0.0)) throw InvalidArgument("image width must be positive");
  check_joint_count(pose, skeleton);
  const auto& mirror = skeleton.mirror_map();
  PoseSeq2D out(pose.frames(), pose.joints());
  for (std::size_t n = 0; n < pose.frames(); ++n) {
    for (std::size_t j = 0; j < pose.joints(); ++j) {
      auto src = pose.at(n, mirror[j]);
      auto dst = out.at(n, j);
      dst.x() = image_width - src.x();
      dst.y() = src.y();
    }
  }
  return out;
}

}  // namespace poselift
