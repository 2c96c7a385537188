#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "poselift/aggregate.hpp"
#include "poselift/camera.hpp"
#include "poselift/denoiser.hpp"
#include "poselift/errors.hpp"
#include "poselift/metrics.hpp"
#include "poselift/mlp.hpp"
#include "poselift/sampler.hpp"
#include "poselift/schedule.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/synth.hpp"
#include "poselift/train.hpp"

namespace py = pybind11;
using namespace poselift;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Poses cross the boundary as (frames, joints, dim) arrays; a 2D (joints, dim)
// array is read as a single frame.
template <int Dim>
PoseSeq<Dim> to_pose(const Array& a) {
  py::buffer_info info = a.request();
  std::size_t frames = 1, joints = 0;
  if (info.ndim == 3) {
    frames = static_cast<std::size_t>(info.shape[0]);
    joints = static_cast<std::size_t>(info.shape[1]);
  } else if (info.ndim == 2) {
    joints = static_cast<std::size_t>(info.shape[0]);
  } else {
    throw ShapeError("expected a (frames, joints, " + std::to_string(Dim) + ") array");
  }
  if (info.shape[info.ndim - 1] != Dim) {
    throw ShapeError("last axis must have length " + std::to_string(Dim));
  }
  const double* p = static_cast<const double*>(info.ptr);
  return PoseSeq<Dim>(frames, joints, std::vector<double>(p, p + frames * joints * Dim));
}

template <int Dim>
Array from_pose(const PoseSeq<Dim>& pose) {
  Array out({pose.frames(), pose.joints(), static_cast<std::size_t>(Dim)});
  std::copy(pose.values().begin(), pose.values().end(), out.mutable_data());
  return out;
}

HypothesisSet to_hypotheses(const Array& a) {
  py::buffer_info info = a.request();
  if (info.ndim != 4 || info.shape[3] != 3) throw ShapeError("expected a (hypotheses, frames, joints, 3) array");
  std::size_t h = info.shape[0], n = info.shape[1], j = info.shape[2];
  const double* p = static_cast<const double*>(info.ptr);
  std::vector<PoseSeq3D> out;
  for (std::size_t i = 0; i < h; ++i) {
    const double* base = p + i * n * j * 3;
    out.emplace_back(n, j, std::vector<double>(base, base + n * j * 3));
  }
  return HypothesisSet(std::move(out));
}

Array from_hypotheses(const HypothesisSet& set) {
  Array out({set.count(), set.frames(), set.joints(), std::size_t{3}});
  double* dst = out.mutable_data();
  for (const PoseSeq3D& h : set) dst = std::copy(h.values().begin(), h.values().end(), dst);
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

AlignmentMode parse_alignment(const std::string& name) {
  if (name == "similarity") return AlignmentMode::kSimilarity;
  if (name == "rigid") return AlignmentMode::kRigid;
  throw InvalidArgument("unknown alignment '" + name + "' (expected similarity|rigid)");
}

std::optional<Skeleton> h36m_if(bool mirror) {
  if (mirror) return Skeleton::h36m();
  return std::nullopt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Diffusion-based multi-hypothesis 3D pose lifting";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<BehindCamera>(m, "BehindCamera", PyExc_RuntimeError);
  py::register_exception<MissingGroundTruth>(m, "MissingGroundTruth", PyExc_RuntimeError);

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_static("cosine", &NoiseSchedule::cosine, py::arg("t_max") = 1000, py::arg("offset") = 0.008,
                  py::arg("max_beta") = 0.999)
      .def_property_readonly("t_max", &NoiseSchedule::t_max)
      .def_property_readonly("betas", [](const NoiseSchedule& s) { return to_array(s.betas()); })
      .def_property_readonly("alphas", [](const NoiseSchedule& s) { return to_array(s.alphas()); })
      .def_property_readonly("alpha_bars", [](const NoiseSchedule& s) { return to_array(s.alpha_bars()); });

  m.def(
      "diffuse",
      [](const Array& y0, int t, const NoiseSchedule& s, const Array& eps) {
        return from_pose(diffuse(to_pose<3>(y0), t, s, to_pose<3>(eps)));
      },
      py::arg("y0"), py::arg("t"), py::arg("schedule"), py::arg("eps"));
  m.def("timestep_ladder", &timestep_ladder, py::arg("t_max"), py::arg("iterations"));
  m.def(
      "ddim_sigma",
      [](int t, int t_next, const NoiseSchedule& s, const std::string& mode) {
        return ddim_sigma(t, t_next, s, parse_sigma_mode(mode));
      },
      py::arg("t"), py::arg("t_next"), py::arg("schedule"), py::arg("mode") = "paper");

  py::class_<CameraIntrinsics>(m, "Camera")
      .def(py::init([](double fx, double fy, double cx, double cy, double k1, double k2, double k3, double p1,
                       double p2) {
             CameraIntrinsics c;
             c.fx = fx, c.fy = fy, c.cx = cx, c.cy = cy;
             c.k1 = k1, c.k2 = k2, c.k3 = k3, c.p1 = p1, c.p2 = p2;
             bool distorted = k1 != 0.0 || k2 != 0.0 || k3 != 0.0 || p1 != 0.0 || p2 != 0.0;
             c.model = distorted ? CameraModel::kDistorted : CameraModel::kPinhole;
             c.validate();
             return c;
           }),
           py::arg("fx") = 1000.0, py::arg("fy") = 1000.0, py::arg("cx") = 500.0, py::arg("cy") = 500.0,
           py::arg("k1") = 0.0, py::arg("k2") = 0.0, py::arg("k3") = 0.0, py::arg("p1") = 0.0,
           py::arg("p2") = 0.0)
      .def_readonly("fx", &CameraIntrinsics::fx)
      .def_readonly("fy", &CameraIntrinsics::fy)
      .def_readonly("cx", &CameraIntrinsics::cx)
      .def_readonly("cy", &CameraIntrinsics::cy)
      .def_property_readonly("distorted", [](const CameraIntrinsics& c) { return c.model == CameraModel::kDistorted; })
      .def_static("load", &load_camera);

  m.def(
      "project",
      [](const Array& pose, const CameraIntrinsics& cam) { return from_pose(project(to_pose<3>(pose), cam)); },
      py::arg("pose"), py::arg("camera"));

  m.def(
      "mpjpe", [](const Array& p, const Array& g) { return mpjpe(to_pose<3>(p), to_pose<3>(g)); }, py::arg("pred"),
      py::arg("gt"));
  m.def(
      "pmpjpe",
      [](const Array& p, const Array& g, const std::string& mode) {
        return pmpjpe(to_pose<3>(p), to_pose<3>(g), parse_alignment(mode));
      },
      py::arg("pred"), py::arg("gt"), py::arg("alignment") = "similarity");
  m.def(
      "procrustes_align",
      [](const Array& p, const Array& g, const std::string& mode) {
        return from_pose(procrustes_align(to_pose<3>(p), to_pose<3>(g), parse_alignment(mode)));
      },
      py::arg("pred"), py::arg("gt"), py::arg("alignment") = "similarity");
  m.def(
      "pck", [](const Array& p, const Array& g, double thr) { return pck(to_pose<3>(p), to_pose<3>(g), thr); },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = kDefaultPckThreshold);
  m.def(
      "auc", [](const Array& p, const Array& g) { return auc(to_pose<3>(p), to_pose<3>(g)); }, py::arg("pred"),
      py::arg("gt"));

  m.def(
      "aggregate",
      [](const std::string& method, const Array& hyps, std::optional<Array> keypoints,
         std::optional<CameraIntrinsics> camera, std::optional<Array> gt) {
        std::optional<PoseSeq2D> kp;
        std::optional<PoseSeq3D> truth;
        AggregationInputs inputs;
        if (keypoints) inputs.keypoints = &kp.emplace(to_pose<2>(*keypoints));
        if (camera) inputs.camera = &*camera;
        if (gt) inputs.gt = &truth.emplace(to_pose<3>(*gt));
        AggregationReport r = aggregate(parse_aggregator(method), to_hypotheses(hyps), inputs);
        return py::make_tuple(from_pose(r.pose), r.chosen, to_array(r.errors));
      },
      py::arg("method"), py::arg("hypotheses"), py::arg("keypoints") = py::none(), py::arg("camera") = py::none(),
      py::arg("gt") = py::none(),
      "Returns (pose, chosen hypothesis per joint, selection errors).");

  py::class_<Skeleton>(m, "Skeleton")
      .def_static("h36m", &Skeleton::h36m)
      .def_static("load", &load_skeleton)
      .def_property_readonly("num_joints", &Skeleton::num_joints)
      .def_property_readonly("parents", &Skeleton::parents)
      .def_property_readonly("mirror_pairs", &Skeleton::mirror_pairs)
      .def_property_readonly("bone_lengths", &Skeleton::bone_lengths)
      .def("flip3d", [](const Skeleton& s, const Array& pose) { return from_pose(flip_pose3d(to_pose<3>(pose), s)); })
      .def("flip2d", [](const Skeleton& s, const Array& pose, double width) {
        return from_pose(flip_pose2d(to_pose<2>(pose), s, width));
      });

  m.def(
      "gen_poses",
      [](std::size_t poses, std::uint64_t seed, double pixel_noise, std::optional<CameraIntrinsics> camera) {
        ScenarioConfig cfg;
        cfg.poses = poses;
        cfg.seed = seed;
        cfg.pixel_noise = pixel_noise;
        if (camera) cfg.camera = *camera;
        cfg.validate();
        py::list out;
        for (const SyntheticSample& s : gen_poses(cfg)) out.append(py::make_tuple(from_pose(s.gt), from_pose(s.keypoints)));
        return out;
      },
      py::arg("poses"), py::arg("seed") = 0, py::arg("pixel_noise") = 0.0, py::arg("camera") = py::none(),
      "List of (gt mm, keypoints px) pairs on the H36M skeleton.");

  m.def(
      "gen_hypotheses",
      [](const Array& gt, std::size_t count, const std::string& model, std::uint64_t seed, std::uint64_t index,
         double sigma_mm, double sigma_ray, double sigma_perp, double offset_mm, double p_wrong,
         double sigma_small) {
        ScenarioConfig cfg;
        cfg.hypotheses = count;
        cfg.seed = seed;
        cfg.model.kind = parse_hypothesis_model(model);
        cfg.model.sigma_mm = sigma_mm;
        cfg.model.sigma_ray = sigma_ray;
        cfg.model.sigma_perp = sigma_perp;
        cfg.model.offset_mm = offset_mm;
        cfg.model.p_wrong = p_wrong;
        cfg.model.sigma_small = sigma_small;
        cfg.validate();
        return from_hypotheses(gen_hypotheses(to_pose<3>(gt), cfg, index));
      },
      py::arg("gt"), py::arg("count") = 20, py::arg("model") = "iid_gaussian", py::arg("seed") = 0,
      py::arg("index") = 0, py::arg("sigma_mm") = 20.0, py::arg("sigma_ray") = 50.0, py::arg("sigma_perp") = 5.0,
      py::arg("offset_mm") = 150.0, py::arg("p_wrong") = 0.3, py::arg("sigma_small") = 5.0);

  py::class_<Denoiser, std::shared_ptr<Denoiser>>(m, "Denoiser")
      .def(
          "predict",
          [](const Denoiser& d, const Array& noisy, const Array& keypoints, int t) {
            return from_pose(d.predict(to_pose<3>(noisy), to_pose<2>(keypoints), t, {}));
          },
          py::arg("noisy"), py::arg("keypoints"), py::arg("t"));

  // Oracles mirror flipped calls through the H36M skeleton when `mirror` is set.
  m.def(
      "oracle_perfect",
      [](const Array& gt, bool mirror) -> std::shared_ptr<Denoiser> {
        return oracle_perfect(to_pose<3>(gt), {}, h36m_if(mirror));
      },
      py::arg("gt"), py::arg("mirror") = true);
  m.def(
      "oracle_contractive",
      [](const Array& gt, double lambda, bool mirror) -> std::shared_ptr<Denoiser> {
        return oracle_contractive(to_pose<3>(gt), lambda, {}, h36m_if(mirror));
      },
      py::arg("gt"), py::arg("lam"), py::arg("mirror") = true);
  m.def(
      "oracle_noisy",
      [](const Array& gt, std::vector<double> sigma_mm, std::uint64_t seed, bool mirror) -> std::shared_ptr<Denoiser> {
        return oracle_noisy(to_pose<3>(gt), std::move(sigma_mm), seed, {}, h36m_if(mirror));
      },
      py::arg("gt"), py::arg("sigma_mm"), py::arg("seed") = 0, py::arg("mirror") = true);
  m.def(
      "load_denoiser",
      [](const std::string& path) -> std::shared_ptr<Denoiser> {
        CheckpointInfo info;
        DenoiserParams params = load_checkpoint(path, &info);
        return std::make_shared<MlpDenoiser>(std::move(params), make_cosine_schedule(info.t_max));
      },
      py::arg("path"));

  m.def(
      "sample",
      [](const Array& keypoints, const Denoiser& denoiser, std::size_t hypotheses, std::size_t iterations,
         std::uint64_t seed, const std::string& sigma_mode, const std::string& flip, int t_max, bool parallel,
         std::optional<Skeleton> skeleton, double image_width) {
        SamplerConfig cfg;
        cfg.hypotheses = hypotheses;
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.sigma_mode = parse_sigma_mode(sigma_mode);
        cfg.flip = parse_flip_mode(flip);
        cfg.t_max = t_max;
        cfg.parallel = parallel;
        NoiseSchedule schedule = make_cosine_schedule(t_max);
        PoseSeq2D kp = to_pose<2>(keypoints);
        HypothesisSet out;
        {
          py::gil_scoped_release release;
          out = sample_flipped(kp, denoiser, cfg, schedule, skeleton.value_or(Skeleton::h36m()), image_width);
        }
        return from_hypotheses(out);
      },
      py::arg("keypoints"), py::arg("denoiser"), py::arg("hypotheses") = 20, py::arg("iterations") = 10,
      py::arg("seed") = 0, py::arg("sigma_mode") = "paper", py::arg("flip") = "none", py::arg("t_max") = 1000,
      py::arg("parallel") = false, py::arg("skeleton") = py::none(), py::arg("image_width") = 1000.0,
      "Returns an (H, frames, joints, 3) array in millimeters.");
}
