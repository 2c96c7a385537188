#include "poselift/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace poselift {

void CameraIntrinsics::validate() const {
  for (double v : {fx, fy, cx, cy, k1, k2, k3, p1, p2}) {
    if (!std::isfinite(v)) throw InvalidArgument("camera parameters must be finite");
  }
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (model == CameraModel::kPinhole && (k1 != 0.0 || k2 != 0.0 || k3 != 0.0 || p1 != 0.0 || p2 != 0.0)) {
    throw InvalidArgument("pinhole camera must have zero distortion coefficients");
  }
}

std::optional<Eigen::Vector2d> try_project_point(const Eigen::Vector3d& point, const CameraIntrinsics& cam,
                                                 double min_depth) {
  const double z = point.z();
  if (!(z > min_depth)) return std::nullopt;
  const double xn = point.x() / z;
  const double yn = point.y() / z;
  if (cam.model == CameraModel::kPinhole) {
    return Eigen::Vector2d(cam.fx * xn + cam.cx, cam.fy * yn + cam.cy);
  }
  const double r2 = xn * xn + yn * yn;
  const double radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2 + cam.k3 * r2 * r2 * r2;
  const double tangential = 2.0 * cam.p1 * xn * xn + 2.0 * cam.p2 * yn * yn;
  const double xd = xn * (radial + tangential) + cam.p1 * r2;
  const double yd = yn * (radial + tangential) + cam.p2 * r2;
  return Eigen::Vector2d(cam.fx * xd + cam.cx, cam.fy * yd + cam.cy);
}

PoseSeq2D project(const PoseSeq3D& pose, const CameraIntrinsics& cam, double min_depth) {
  PoseSeq2D out(pose.frames(), pose.joints());
  for (std::size_t n = 0; n < pose.frames(); ++n) {
    for (std::size_t j = 0; j < pose.joints(); ++j) {
      const auto uv = try_project_point(pose.at(n, j), cam, min_depth);
      if (!uv) throw BehindCamera(n, j, pose.at(n, j).z());
      out.at(n, j) = *uv;
    }
  }
  return out;
}

Eigen::Vector3d ray_point(double u, double v, double depth, const CameraIntrinsics& cam) {
  if (!(depth > 0.0)) throw InvalidArgument("ray depth must be positive");
  if (cam.model != CameraModel::kPinhole) throw InvalidArgument("ray_point requires a pinhole camera");
  return {(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
}

namespace {

using Json = nlohmann::json;

}  // namespace

CameraIntrinsics camera_from_json_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(1, std::string("camera JSON: ") + e.what());
  }
  CameraIntrinsics cam;
  try {
    const auto model = doc.value("model", std::string("pinhole"));
    if (model == "pinhole") {
      cam.model = CameraModel::kPinhole;
    } else if (model == "distorted") {
      cam.model = CameraModel::kDistorted;
    } else {
      throw SchemaError("unknown camera model '" + model + "'");
    }
    cam.fx = doc.at("fx").get<double>();
    cam.fy = doc.at("fy").get<double>();
    cam.cx = doc.at("cx").get<double>();
    cam.cy = doc.at("cy").get<double>();
    cam.k1 = doc.value("k1", 0.0);
    cam.k2 = doc.value("k2", 0.0);
    cam.k3 = doc.value("k3", 0.0);
    cam.p1 = doc.value("p1", 0.0);
    cam.p2 = doc.value("p2", 0.0);
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("camera JSON: ") + e.what());
  }
  cam.validate();
  return cam;
}

std::string camera_to_json_text(const CameraIntrinsics& cam) {
  Json doc{{"model", cam.model == CameraModel::kPinhole ? "pinhole" : "distorted"},
           {"fx", cam.fx},
           {"fy", cam.fy},
           {"cx", cam.cx},
           {"cy", cam.cy},
           {"k1", cam.k1},
           {"k2", cam.k2},
           {"k3", cam.k3},
           {"p1", cam.p1},
           {"p2", cam.p2}};
  return doc.dump(2);
}

CameraIntrinsics load_camera(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open camera file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return camera_from_json_text(buffer.str());
}

void save_camera(const CameraIntrinsics& cam, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write camera file " + path.string());
  out << camera_to_json_text(cam) << '\n';
}

}  // namespace poselift
