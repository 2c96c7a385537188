#include "poselift/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "poselift/pose_io.hpp"
#include "poselift/rng.hpp"

namespace poselift {

namespace {

using Json = nlohmann::json;

constexpr std::uint64_t kPoseTag = 0x706f7365ull;
constexpr std::uint64_t kPixelTag = 0x706978656cull;
constexpr std::uint64_t kHypothesisTag = 0x687970ull;

double uniform_in(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Eigen::Vector3d normal3(RngStream& rng) {
  const double x = rng.normal();
  const double y = rng.normal();
  const double z = rng.normal();
  return {x, y, z};
}

Eigen::Vector3d unit_direction(RngStream& rng) {
  for (;;) {
    const Eigen::Vector3d v = normal3(rng);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Eigen::Vector3d rest_direction(const Skeleton& skeleton, std::size_t joint) {
  if (!skeleton.rest_directions().empty()) return skeleton.rest_directions()[joint];
  return Eigen::Vector3d::UnitY();
}

void check_finite_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be a finite value >= 0");
}

}  // namespace

std::string to_string(HypothesisModelKind kind) {
  switch (kind) {
    case HypothesisModelKind::kIidGaussian:
      return "iid_gaussian";
    case HypothesisModelKind::kDepthRay:
      return "depth_ray";
    case HypothesisModelKind::kBimodal:
      return "bimodal";
  }
  return "iid_gaussian";
}

HypothesisModelKind parse_hypothesis_model(const std::string& name) {
  if (name == "iid_gaussian") return HypothesisModelKind::kIidGaussian;
  if (name == "depth_ray") return HypothesisModelKind::kDepthRay;
  if (name == "bimodal") return HypothesisModelKind::kBimodal;
  throw InvalidArgument("unknown hypothesis model '" + name + "' (expected iid_gaussian|depth_ray|bimodal)");
}

void ScenarioConfig::validate() const {
  camera.validate();
  if (frames == 0) throw InvalidArgument("frames per sample must be positive");
  check_finite_nonnegative(pixel_noise, "pixel noise");
  check_finite_nonnegative(angle_range, "angle range");
  check_finite_nonnegative(yaw_range, "yaw range");
  check_finite_nonnegative(model.sigma_mm, "sigma_mm");
  check_finite_nonnegative(model.sigma_ray, "sigma_ray");
  check_finite_nonnegative(model.sigma_perp, "sigma_perp");
  check_finite_nonnegative(model.offset_mm, "offset_mm");
  check_finite_nonnegative(model.sigma_small, "sigma_small");
  if (!(model.p_wrong >= 0.0 && model.p_wrong <= 1.0)) throw InvalidArgument("p_wrong must lie in [0, 1]");
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(root_min[i]) || !std::isfinite(root_max[i]) || root_min[i] > root_max[i]) {
      throw InvalidArgument("root box bounds are inverted or not finite");
    }
  }
  const double nearest = root_min.z() - skeleton.reach();
  if (!(nearest > kDefaultMinDepth)) {
    throw InvalidArgument("root box is too close: joints could reach depth " + std::to_string(nearest) +
                          " mm, behind the camera");
  }
}

std::vector<SyntheticSample> gen_poses(const ScenarioConfig& config) {
  config.validate();
  const Skeleton& sk = config.skeleton;
  const std::size_t joints = sk.num_joints();
  std::vector<SyntheticSample> out;
  out.reserve(config.poses);
  std::vector<Eigen::Matrix3d> global(joints);

  for (std::size_t i = 0; i < config.poses; ++i) {
    RngStream rng(config.seed, derive_stream(kPoseTag, i));
    RngStream pixel_rng(config.seed, derive_stream(kPixelTag, i));
    PoseSeq3D gt(config.frames, joints);
    for (std::size_t f = 0; f < config.frames; ++f) {
      Eigen::Vector3d root;
      for (int a = 0; a < 3; ++a) root[a] = uniform_in(rng, config.root_min[a], config.root_max[a]);
      const double yaw = uniform_in(rng, -config.yaw_range, config.yaw_range);
      global[sk.root()] = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
      gt.at(f, sk.root()) = root;
      for (std::size_t j : sk.topological_order()) {
        if (j == sk.root()) continue;
        const double ax = uniform_in(rng, -config.angle_range, config.angle_range);
        const double ay = uniform_in(rng, -config.angle_range, config.angle_range);
        const double az = uniform_in(rng, -config.angle_range, config.angle_range);
        const Eigen::Matrix3d local = (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
                                       Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                                       Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
                                          .toRotationMatrix();
        const auto p = static_cast<std::size_t>(sk.parent(j));
        global[j] = global[p] * local;
        const Eigen::Vector3d bone = global[j] * rest_direction(sk, j).normalized() * sk.bone_lengths()[j];
        gt.at(f, j) = gt.at(f, p) + bone;
      }
    }
    PoseSeq2D keypoints = project(gt, config.camera);
    if (config.pixel_noise > 0.0) {
      for (double& v : keypoints.values()) v += config.pixel_noise * pixel_rng.normal();
    }
    out.push_back({std::move(gt), std::move(keypoints)});
  }
  return out;
}

HypothesisSet gen_hypotheses(const PoseSeq3D& gt, const ScenarioConfig& config, std::uint64_t index) {
  if (config.hypotheses < 1) throw InvalidArgument("hypothesis count must be at least 1");
  const HypothesisModel& m = config.model;
  const std::uint64_t parent = derive_stream(kHypothesisTag, index);
  std::vector<PoseSeq3D> out;
  out.reserve(config.hypotheses);
  for (std::size_t h = 0; h < config.hypotheses; ++h) {
    RngStream rng(config.seed, derive_stream(parent, h));
    PoseSeq3D hyp = gt;
    for (std::size_t f = 0; f < gt.frames(); ++f) {
      for (std::size_t j = 0; j < gt.joints(); ++j) {
        const Eigen::Vector3d p = gt.at(f, j);
        switch (m.kind) {
          case HypothesisModelKind::kIidGaussian:
            hyp.at(f, j) = p + m.sigma_mm * normal3(rng);
            break;
          case HypothesisModelKind::kDepthRay: {
            // Scaling p keeps it on its own camera ray.
            const double dist = p.norm();
            const Eigen::Vector3d ray = p / dist;
            const double along = m.sigma_ray * rng.normal();
            Eigen::Vector3d perp = m.sigma_perp * normal3(rng);
            perp -= perp.dot(ray) * ray;
            hyp.at(f, j) = p * ((dist + along) / dist) + perp;
            break;
          }
          case HypothesisModelKind::kBimodal: {
            const bool wrong = rng.uniform() < m.p_wrong;
            const Eigen::Vector3d small = m.sigma_small * normal3(rng);
            const Eigen::Vector3d dir = unit_direction(rng);
            hyp.at(f, j) = wrong ? Eigen::Vector3d(p + m.offset_mm * dir) : Eigen::Vector3d(p + small);
            break;
          }
        }
      }
    }
    out.push_back(std::move(hyp));
  }
  return HypothesisSet(std::move(out));
}

std::string scenario_to_json_text(const ScenarioConfig& c) {
  const auto vec = [](const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); };
  const Json doc{{"poses", c.poses},
                 {"frames", c.frames},
                 {"pixel_noise", c.pixel_noise},
                 {"angle_range", c.angle_range},
                 {"yaw_range", c.yaw_range},
                 {"root_min", vec(c.root_min)},
                 {"root_max", vec(c.root_max)},
                 {"hypotheses", c.hypotheses},
                 {"model",
                  {{"kind", to_string(c.model.kind)},
                   {"sigma_mm", c.model.sigma_mm},
                   {"sigma_ray", c.model.sigma_ray},
                   {"sigma_perp", c.model.sigma_perp},
                   {"offset_mm", c.model.offset_mm},
                   {"p_wrong", c.model.p_wrong},
                   {"sigma_small", c.model.sigma_small}}},
                 {"seed", c.seed}};
  return doc.dump(2);
}

void scenario_from_json_text(const std::string& text, ScenarioConfig& c) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(1, std::string("scenario: ") + e.what());
  }
  try {
    const auto get = [&](const Json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
    };
    const auto get_vec = [&](const char* key, Eigen::Vector3d& field) {
      if (!doc.contains(key)) return;
      const auto v = doc.at(key).get<std::vector<double>>();
      if (v.size() != 3) throw SchemaError(std::string(key) + " must have 3 components");
      field = {v[0], v[1], v[2]};
    };
    get(doc, "poses", c.poses);
    get(doc, "frames", c.frames);
    get(doc, "pixel_noise", c.pixel_noise);
    get(doc, "angle_range", c.angle_range);
    get(doc, "yaw_range", c.yaw_range);
    get_vec("root_min", c.root_min);
    get_vec("root_max", c.root_max);
    get(doc, "hypotheses", c.hypotheses);
    get(doc, "seed", c.seed);
    if (doc.contains("model")) {
      const Json& m = doc.at("model");
      if (m.contains("kind")) c.model.kind = parse_hypothesis_model(m.at("kind").get<std::string>());
      get(m, "sigma_mm", c.model.sigma_mm);
      get(m, "sigma_ray", c.model.sigma_ray);
      get(m, "sigma_perp", c.model.sigma_perp);
      get(m, "offset_mm", c.model.offset_mm);
      get(m, "p_wrong", c.model.p_wrong);
      get(m, "sigma_small", c.model.sigma_small);
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
}

void save_dataset(const std::vector<SyntheticSample>& samples, const ScenarioConfig& config,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t joints = config.skeleton.num_joints();
  std::vector<double> gt_values;
  std::vector<double> kp_values;
  for (const auto& s : samples) {
    if (s.gt.frames() != config.frames || s.gt.joints() != joints) throw ShapeError("sample shape differs from scenario");
    require_same_layout(s.gt, s.keypoints, "dataset sample");
    gt_values.insert(gt_values.end(), s.gt.values().begin(), s.gt.values().end());
    kp_values.insert(kp_values.end(), s.keypoints.values().begin(), s.keypoints.values().end());
  }
  const std::size_t frames = samples.size() * config.frames;
  save_poses(PoseSeq3D(frames, joints, std::move(gt_values)), dir / "gt.jsonl");
  save_poses(PoseSeq2D(frames, joints, std::move(kp_values)), dir / "keypoints.jsonl");
  save_skeleton(config.skeleton, dir / "skeleton.json");
  save_camera(config.camera, dir / "camera.json");
  ScenarioConfig stored = config;
  stored.poses = samples.size();
  std::ofstream out(dir / "scenario.json");
  if (!out) throw InvalidArgument("cannot write scenario manifest in " + dir.string());
  out << scenario_to_json_text(stored) << '\n';
}

std::vector<SyntheticSample> load_dataset(const std::filesystem::path& dir, ScenarioConfig* config) {
  ScenarioConfig cfg;
  {
    std::ifstream in(dir / "scenario.json");
    if (!in) throw InvalidArgument("missing scenario manifest in " + dir.string());
    std::stringstream text;
    text << in.rdbuf();
    scenario_from_json_text(text.str(), cfg);
  }
  cfg.skeleton = load_skeleton(dir / "skeleton.json");
  cfg.camera = load_camera(dir / "camera.json");
  const PoseSeq3D gt = load_poses3d(dir / "gt.jsonl");
  const PoseSeq2D kp = load_poses2d(dir / "keypoints.jsonl");
  require_same_layout(gt, kp, "dataset");
  if (cfg.frames == 0 || gt.frames() != cfg.poses * cfg.frames || gt.joints() != cfg.skeleton.num_joints()) {
    throw SchemaError("dataset files do not match the scenario manifest");
  }
  std::vector<SyntheticSample> out;
  out.reserve(cfg.poses);
  const std::size_t stride3 = cfg.frames * gt.joints() * 3;
  const std::size_t stride2 = cfg.frames * gt.joints() * 2;
  for (std::size_t i = 0; i < cfg.poses; ++i) {
    std::vector<double> g(gt.values().begin() + i * stride3, gt.values().begin() + (i + 1) * stride3);
    std::vector<double> k(kp.values().begin() + i * stride2, kp.values().begin() + (i + 1) * stride2);
    out.push_back({PoseSeq3D(cfg.frames, gt.joints(), std::move(g)), PoseSeq2D(cfg.frames, gt.joints(), std::move(k))});
  }
  if (config != nullptr) *config = std::move(cfg);
  return out;
}

}  // namespace poselift
