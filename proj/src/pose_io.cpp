#include "poselift/pose_io.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

namespace poselift {

namespace {

using Json = nlohmann::json;

template <int Dim>
void write_impl(const PoseSeq<Dim>& pose, std::ostream& out) {
  Json header{{"J", pose.joints()}, {"dims", Dim}, {"frames", pose.frames()}};
  out << header.dump() << '\n';
  for (std::size_t n = 0; n < pose.frames(); ++n) {
    Json joints = Json::array();
    for (std::size_t j = 0; j < pose.joints(); ++j) {
      Json point = Json::array();
      const auto p = pose.at(n, j);
      for (int d = 0; d < Dim; ++d) point.push_back(p[d]);
      joints.push_back(std::move(point));
    }
    out << Json{{"frame", n}, {"joints", std::move(joints)}}.dump() << '\n';
  }
  if (!out) throw Error("failed writing pose stream");
}

Json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
}

template <int Dim>
PoseSeq<Dim> read_records(std::istream& in, std::size_t joints, std::size_t line_no,
                          long declared_frames) {
  std::vector<double> values;
  std::size_t frames = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json record = parse_line(line, line_no);
    if (!record.is_object() || !record.contains("joints") || !record["joints"].is_array()) {
      throw ParseError(line_no, "record must be an object with a \"joints\" array");
    }
    if (record.contains("frame")) {
      if (!record["frame"].is_number_integer() || record["frame"].get<long>() != static_cast<long>(frames)) {
        throw SchemaError("line " + std::to_string(line_no) + ": expected frame " + std::to_string(frames));
      }
    }
    const Json& pts = record["joints"];
    if (pts.size() != joints) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + std::to_string(pts.size()) +
                        " joints, header declares " + std::to_string(joints));
    }
    for (const Json& p : pts) {
      if (!p.is_array()) throw ParseError(line_no, "joint must be a coordinate array");
      if (p.size() != static_cast<std::size_t>(Dim)) {
        throw SchemaError("line " + std::to_string(line_no) + ": joint has " + std::to_string(p.size()) +
                          " coordinates, header declares " + std::to_string(Dim));
      }
      for (const Json& v : p) {
        if (!v.is_number()) throw ParseError(line_no, "coordinate is not a number");
        values.push_back(v.get<double>());
      }
    }
    ++frames;
  }
  if (declared_frames >= 0 && static_cast<std::size_t>(declared_frames) != frames) {
    throw SchemaError("header declares " + std::to_string(declared_frames) + " frames, file has " +
                      std::to_string(frames));
  }
  PoseSeq<Dim> pose(frames, joints, std::move(values));
  if (!pose.all_finite()) throw SchemaError("pose file contains non-finite coordinates");
  return pose;
}

template <int Dim>
void save_impl(const PoseSeq<Dim>& pose, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write pose file " + path.string());
  write_impl(pose, out);
}

}  // namespace

void write_poses(const PoseSeq3D& pose, std::ostream& out) { write_impl(pose, out); }
void write_poses(const PoseSeq2D& pose, std::ostream& out) { write_impl(pose, out); }

AnyPoseSeq read_poses(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool found = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      found = true;
      break;
    }
  }
  if (!found) throw ParseError(line_no == 0 ? 1 : line_no, "empty pose file (missing header)");

  const Json header = parse_line(line, line_no);
  if (!header.is_object() || !header.contains("J") || !header.contains("dims") ||
      !header["J"].is_number_unsigned() || !header["dims"].is_number_integer()) {
    throw ParseError(line_no, "header must be {\"J\": count, \"dims\": 2|3}");
  }
  const auto joints = header["J"].get<std::size_t>();
  const long declared = header.contains("frames") ? header["frames"].get<long>() : -1;
  switch (header["dims"].get<int>()) {
    case 3:
      return read_records<3>(in, joints, line_no, declared);
    case 2:
      return read_records<2>(in, joints, line_no, declared);
    default:
      throw SchemaError("unsupported dims " + header["dims"].dump());
  }
}

void save_poses(const PoseSeq3D& pose, const std::filesystem::path& path) { save_impl(pose, path); }
void save_poses(const PoseSeq2D& pose, const std::filesystem::path& path) { save_impl(pose, path); }

AnyPoseSeq load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open pose file " + path.string());
  return read_poses(in);
}

PoseSeq3D load_poses3d(const std::filesystem::path& path) {
  auto any = load_poses(path);
  if (auto* p = std::get_if<PoseSeq3D>(&any)) return std::move(*p);
  throw SchemaError(path.string() + ": expected a 3D pose file");
}

PoseSeq2D load_poses2d(const std::filesystem::path& path) {
  auto any = load_poses(path);
  if (auto* p = std::get_if<PoseSeq2D>(&any)) return std::move(*p);
  throw SchemaError(path.string() + ": expected a 2D pose file");
}

}  // namespace poselift
