#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>
#include <string>

#include "poselift/pose.hpp"
#include "poselift/skeleton.hpp"

namespace testing_support {

using poselift::PoseSeq2D;
using poselift::PoseSeq3D;

// Test randomness comes from the standard library so the oracles never share
// code with the library's own generator.
inline PoseSeq3D random_pose(std::mt19937_64& gen, std::size_t frames, std::size_t joints, double depth = 4000.0,
                             double spread = 400.0) {
  std::normal_distribution<double> n(0.0, spread);
  PoseSeq3D p(frames, joints);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t j = 0; j < joints; ++j) p.at(f, j) = Eigen::Vector3d(n(gen), n(gen), depth + n(gen));
  }
  return p;
}

inline PoseSeq3D offset_pose(const PoseSeq3D& p, const Eigen::Vector3d& d) {
  PoseSeq3D out = p;
  for (std::size_t f = 0; f < p.frames(); ++f) {
    for (std::size_t j = 0; j < p.joints(); ++j) out.at(f, j) += d;
  }
  return out;
}

template <int Dim>
double max_abs_diff(const poselift::PoseSeq<Dim>& a, const poselift::PoseSeq<Dim>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

/// Pelvis with two legs: joints 1 and 2 are a mirror pair.
inline poselift::Skeleton three_joint_skeleton() {
  return poselift::Skeleton({-1, 0, 0}, {{1, 2}}, {0.0, 100.0, 100.0},
                            {Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(-1, 1, 0)});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("poselift_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing_support
