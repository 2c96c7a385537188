#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "poselift/pose.hpp"

namespace poselift {

// JSON Lines pose files. Line 1 is a header {"J": joints, "dims": 2|3,
// "frames": N}; each following line is {"frame": k, "joints": [[...], ...]}.
// Numbers are written in shortest round-trip form, so load(save(p)) == p.

using AnyPoseSeq = std::variant<PoseSeq3D, PoseSeq2D>;

void write_poses(const PoseSeq3D& pose, std::ostream& out);
void write_poses(const PoseSeq2D& pose, std::ostream& out);
AnyPoseSeq read_poses(std::istream& in);

void save_poses(const PoseSeq3D& pose, const std::filesystem::path& path);
void save_poses(const PoseSeq2D& pose, const std::filesystem::path& path);
AnyPoseSeq load_poses(const std::filesystem::path& path);

/// Loads and requires the given dimensionality (SchemaError otherwise).
PoseSeq3D load_poses3d(const std::filesystem::path& path);
PoseSeq2D load_poses2d(const std::filesystem::path& path);

}  // namespace poselift
