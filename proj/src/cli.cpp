#include "poselift/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "poselift/pose_io.hpp"

namespace poselift {

namespace {

using Json = nlohmann::json;

constexpr std::uint64_t kInitTag = 0x696e6974ull;
constexpr std::uint64_t kOracleTag = 0x6f7261636c65ull;

std::string read_text(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(std::string("cannot open ") + what + " " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

AlignmentMode parse_alignment(const std::string& name) {
  if (name == "similarity") return AlignmentMode::kSimilarity;
  if (name == "rigid") return AlignmentMode::kRigid;
  throw InvalidArgument("unknown alignment '" + name + "' (expected similarity|rigid)");
}

std::string alignment_name(AlignmentMode mode) { return mode == AlignmentMode::kRigid ? "rigid" : "similarity"; }

RegressionTarget parse_target(const std::string& name) {
  if (name == "y0") return RegressionTarget::kPredictY0;
  if (name == "eps") return RegressionTarget::kPredictEps;
  throw InvalidArgument("unknown regression target '" + name + "' (expected y0|eps)");
}

template <typename T>
void get_if(const Json& obj, const char* key, T& field) {
  if (obj.contains(key)) field = obj.at(key).get<T>();
}

void get_path(const Json& obj, const char* key, std::filesystem::path& field) {
  if (obj.contains(key)) field = obj.at(key).get<std::string>();
}

/// Camera and skeleton come from explicit files when given, else from the dataset.
void resolve_scene(const RunConfig& config, CameraIntrinsics& camera, Skeleton& skeleton) {
  if (!config.camera_file.empty()) camera = load_camera(config.camera_file);
  if (!config.skeleton_file.empty()) skeleton = load_skeleton(config.skeleton_file);
}

void write_manifest(const RunConfig& config, const std::string& command, const Json& extra = Json::object()) {
  Json doc{{"command", command},
           {"seed", config.seed},
           {"config_hash", config_hash(config)},
           {"config", Json::parse(run_config_to_json_text(config))}};
  for (const auto& [key, value] : extra.items()) doc[key] = value;
  write_text(config.out / ("manifest_" + command + ".json"), doc.dump(2) + "\n");
}

void maybe_dump_schedule(const RunConfig& config, const NoiseSchedule& schedule) {
  if (config.schedule_csv.empty()) return;
  std::ostringstream csv;
  schedule.write_csv(csv);
  write_text(config.schedule_csv, csv.str());
}

template <int Dim>
PoseSeq<Dim> concatenate(const std::vector<PoseSeq<Dim>>& parts) {
  std::size_t frames = 0;
  std::vector<double> values;
  for (const auto& p : parts) {
    if (p.joints() != parts.front().joints()) throw ShapeError("cannot concatenate poses with different joint counts");
    frames += p.frames();
    values.insert(values.end(), p.values().begin(), p.values().end());
  }
  return PoseSeq<Dim>(frames, parts.empty() ? 0 : parts.front().joints(), std::move(values));
}

template <int Dim>
std::vector<PoseSeq<Dim>> split(const PoseSeq<Dim>& all, std::size_t frames_per_sample) {
  if (frames_per_sample == 0 || all.frames() % frames_per_sample != 0) {
    throw SchemaError("pose file frame count is not a multiple of the frames per sample");
  }
  std::vector<PoseSeq<Dim>> out;
  const std::size_t stride = frames_per_sample * all.joints() * Dim;
  for (std::size_t i = 0; i * frames_per_sample < all.frames(); ++i) {
    std::vector<double> v(all.values().begin() + i * stride, all.values().begin() + (i + 1) * stride);
    out.emplace_back(frames_per_sample, all.joints(), std::move(v));
  }
  return out;
}

/// Builds the denoiser for sample i.
class DenoiserSource {
 public:
  DenoiserSource(const RunConfig& config, const InferInputs& inputs) : config_(config), inputs_(inputs) {
    if (config.oracle.kind != OracleKind::kNone) {
      if (inputs.gt.empty()) {
        throw MissingGroundTruth(to_string(config.oracle.kind) + " oracle needs ground truth in the dataset");
      }
      return;
    }
    CheckpointInfo info;
    DenoiserParams params = load_checkpoint(config.checkpoint_path(), &info);
    if (info.t_max != config.t_max) {
      throw InvalidArgument("checkpoint was trained with T_max " + std::to_string(info.t_max) + ", config has " +
                            std::to_string(config.t_max));
    }
    if (info.signal_scale != config.signal_scale) {
      throw InvalidArgument("checkpoint signal scale " + format_number(info.signal_scale) + " differs from config " +
                            format_number(config.signal_scale));
    }
    if (params.config().joints != inputs.skeleton.num_joints()) {
      throw InvalidArgument("checkpoint joint count differs from the skeleton");
    }
    model_ = std::make_shared<MlpDenoiser>(std::move(params), make_cosine_schedule(config.t_max));
  }

  std::shared_ptr<const Denoiser> get(std::size_t i) const {
    if (model_) return model_;
    const SignalScaling scaling{config_.signal_scale};
    const PoseSeq3D& gt = inputs_.gt.at(i);
    switch (config_.oracle.kind) {
      case OracleKind::kPerfect:
        return oracle_perfect(gt, scaling, inputs_.skeleton);
      case OracleKind::kContractive:
        return oracle_contractive(gt, config_.oracle.lambda, scaling, inputs_.skeleton);
      case OracleKind::kNoisy:
        return oracle_noisy(gt, {config_.oracle.sigma_mm}, derive_stream(derive_stream(config_.seed, i), kOracleTag),
                            scaling, inputs_.skeleton);
      case OracleKind::kNone:
        break;
    }
    throw InvalidArgument("no denoiser configured");
  }

 private:
  const RunConfig& config_;
  const InferInputs& inputs_;
  std::shared_ptr<const Denoiser> model_;
};

void require_ground_truth_for(const std::vector<Aggregator>& aggregators, const InferInputs& inputs) {
  if (!inputs.gt.empty()) return;
  for (Aggregator a : aggregators) {
    if (requires_ground_truth(a)) {
      throw MissingGroundTruth(to_string(a) + " selects with ground truth, which the dataset does not provide");
    }
  }
}

HypothesisSet sample_one(const RunConfig& config, const InferInputs& inputs, const DenoiserSource& source,
                         const NoiseSchedule& schedule, std::size_t i, std::size_t hypotheses, std::size_t iterations) {
  SamplerConfig sc = config.sampler;
  sc.hypotheses = hypotheses;
  sc.iterations = iterations;
  sc.seed = derive_stream(config.seed, i);
  const auto denoiser = source.get(i);
  return sample_flipped(inputs.keypoints[i], *denoiser, sc, schedule, inputs.skeleton, inputs.camera.image_width());
}

HypothesisSet prefix(const HypothesisSet& all, std::size_t count) {
  std::vector<PoseSeq3D> out(all.hypotheses().begin(), all.hypotheses().begin() + static_cast<long>(count));
  return HypothesisSet(std::move(out));
}

std::vector<PoseSeq3D> aggregate_all(const std::vector<Aggregator>& aggregators,
                                     const std::vector<HypothesisSet>& sets, const InferInputs& inputs) {
  std::vector<PoseSeq3D> out;
  for (Aggregator a : aggregators) {
    std::vector<PoseSeq3D> per_sample;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      AggregationInputs in{&inputs.keypoints[i], &inputs.camera, inputs.gt.empty() ? nullptr : &inputs.gt[i]};
      per_sample.push_back(aggregate(a, sets[i], in).pose);
    }
    out.push_back(concatenate(per_sample));
  }
  return out;
}

MetricRow evaluate_row(const std::string& method, std::size_t h, std::size_t k, const PoseSeq3D& pred,
                       const PoseSeq3D& gt, const MetricOptions& options) {
  const MetricReport r = evaluate(pred, gt, options);
  return MetricRow{method, h, k, r.mpjpe, r.pmpjpe, r.pck, r.auc};
}

std::string svg_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void draw_pose(std::ostringstream& svg, const PoseSeq3D& pose, std::size_t frame, const CameraIntrinsics& camera,
               const Skeleton* skeleton, const std::string& color, const std::string& dash, double width,
               std::size_t* omitted) {
  std::vector<std::optional<Eigen::Vector2d>> points(pose.joints());
  for (std::size_t j = 0; j < pose.joints(); ++j) {
    points[j] = try_project_point(pose.at(frame, j), camera);
    if (!points[j] && omitted != nullptr) ++*omitted;
  }
  svg << "  <g stroke=\"" << color << "\" fill=\"" << color << "\" stroke-width=\"" << svg_number(width) << "\"";
  if (!dash.empty()) svg << " stroke-dasharray=\"" << dash << "\"";
  svg << ">\n";
  if (skeleton != nullptr) {
    for (std::size_t j = 0; j < pose.joints(); ++j) {
      const int p = skeleton->parent(j);
      if (p < 0 || static_cast<std::size_t>(p) == j || !points[j] || !points[static_cast<std::size_t>(p)]) continue;
      const auto& a = *points[static_cast<std::size_t>(p)];
      const auto& b = *points[j];
      svg << "    <line x1=\"" << svg_number(a.x()) << "\" y1=\"" << svg_number(a.y()) << "\" x2=\""
          << svg_number(b.x()) << "\" y2=\"" << svg_number(b.y()) << "\"/>\n";
    }
  }
  for (const auto& pt : points) {
    if (!pt) continue;
    svg << "    <circle cx=\"" << svg_number(pt->x()) << "\" cy=\"" << svg_number(pt->y()) << "\" r=\""
        << svg_number(width * 1.5) << "\"/>\n";
  }
  svg << "  </g>\n";
}

}  // namespace

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kNone:
      return "none";
    case OracleKind::kPerfect:
      return "perfect";
    case OracleKind::kContractive:
      return "contractive";
    case OracleKind::kNoisy:
      return "noisy";
  }
  return "none";
}

OracleKind parse_oracle(const std::string& name) {
  if (name == "none") return OracleKind::kNone;
  if (name == "perfect") return OracleKind::kPerfect;
  if (name == "contractive") return OracleKind::kContractive;
  if (name == "noisy") return OracleKind::kNoisy;
  throw InvalidArgument("unknown oracle '" + name + "' (expected perfect|contractive|noisy)");
}

void RunConfig::finalize() {
  scenario.seed = seed;
  train.seed = seed;
  train.signal_scale = signal_scale;
  sampler.seed = seed;
  sampler.t_max = t_max;
  sampler.signal_scale = signal_scale;
  denoiser.joints = scenario.skeleton.num_joints();
  if (t_max < 2) throw InvalidArgument("T_max must be at least 2");
  if (!(signal_scale > 0.0)) throw InvalidArgument("signal scale must be positive");
  sampler.validate();
  if (!(metrics.pck_threshold > 0.0)) throw InvalidArgument("PCK threshold must be positive");
  if (train.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (oracle.kind == OracleKind::kContractive && !(oracle.lambda >= 0.0 && oracle.lambda < 1.0)) {
    throw InvalidArgument("contractive oracle lambda must lie in [0, 1)");
  }
  if (oracle.kind == OracleKind::kNoisy && !(oracle.sigma_mm >= 0.0)) {
    throw InvalidArgument("noisy oracle sigma must be >= 0");
  }
  if (aggregators.empty()) throw InvalidArgument("no aggregators requested");
}

RunConfig run_config_from_json_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(1, std::string("run config: ") + e.what());
  }
  RunConfig c;
  try {
    get_if(doc, "seed", c.seed);
    get_path(doc, "out", c.out);
    get_path(doc, "dataset", c.dataset);
    get_path(doc, "checkpoint", c.checkpoint);
    get_path(doc, "camera_file", c.camera_file);
    get_path(doc, "skeleton_file", c.skeleton_file);
    get_path(doc, "schedule_csv", c.schedule_csv);
    get_if(doc, "t_max", c.t_max);
    get_if(doc, "signal_scale", c.signal_scale);
    if (doc.contains("scenario")) scenario_from_json_text(doc.at("scenario").dump(), c.scenario);
    if (doc.contains("camera")) c.scenario.camera = camera_from_json_text(doc.at("camera").dump());
    if (doc.contains("skeleton")) c.scenario.skeleton = skeleton_from_json_text(doc.at("skeleton").dump());
    if (doc.contains("denoiser")) {
      const Json& d = doc.at("denoiser");
      get_if(d, "hidden_width", c.denoiser.hidden_width);
      get_if(d, "hidden_layers", c.denoiser.hidden_layers);
      get_if(d, "embed_dim", c.denoiser.embed_dim);
      if (d.contains("target")) c.denoiser.target = parse_target(d.at("target").get<std::string>());
    }
    if (doc.contains("train")) {
      const Json& t = doc.at("train");
      get_if(t, "steps", c.train.steps);
      get_if(t, "batch_size", c.train.batch_size);
      get_if(t, "learning_rate", c.train.learning_rate);
      get_if(t, "beta1", c.train.beta1);
      get_if(t, "beta2", c.train.beta2);
      get_if(t, "weight_decay", c.train.weight_decay);
    }
    if (doc.contains("sampler")) {
      const Json& s = doc.at("sampler");
      get_if(s, "hypotheses", c.sampler.hypotheses);
      get_if(s, "iterations", c.sampler.iterations);
      get_if(s, "parallel", c.sampler.parallel);
      if (s.contains("sigma_mode")) c.sampler.sigma_mode = parse_sigma_mode(s.at("sigma_mode").get<std::string>());
      if (s.contains("flip")) c.sampler.flip = parse_flip_mode(s.at("flip").get<std::string>());
    }
    if (doc.contains("oracle")) {
      const Json& o = doc.at("oracle");
      if (o.contains("kind")) c.oracle.kind = parse_oracle(o.at("kind").get<std::string>());
      get_if(o, "lambda", c.oracle.lambda);
      get_if(o, "sigma_mm", c.oracle.sigma_mm);
    }
    if (doc.contains("aggregators")) {
      c.aggregators.clear();
      for (const auto& a : doc.at("aggregators")) c.aggregators.push_back(parse_aggregator(a.get<std::string>()));
    }
    if (doc.contains("metrics")) {
      const Json& m = doc.at("metrics");
      get_if(m, "pck_threshold", c.metrics.pck_threshold);
      if (m.contains("alignment")) c.metrics.alignment = parse_alignment(m.at("alignment").get<std::string>());
    }
    if (doc.contains("bench")) {
      const Json& b = doc.at("bench");
      get_if(b, "hypotheses", c.bench.hypotheses);
      get_if(b, "iterations", c.bench.iterations);
    }
    if (doc.contains("render")) {
      const Json& r = doc.at("render");
      get_path(r, "gt", c.render.gt);
      get_path(r, "hypotheses", c.render.hypotheses);
      get_if(r, "stroke_width", c.render.stroke_width);
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("run config: ") + e.what());
  }
  return c;
}

std::string run_config_to_json_text(const RunConfig& c) {
  Json aggregators = Json::array();
  for (Aggregator a : c.aggregators) aggregators.push_back(to_string(a));
  const Json doc{
      {"seed", c.seed},
      {"out", c.out.string()},
      {"dataset", c.dataset.string()},
      {"checkpoint", c.checkpoint.string()},
      {"camera_file", c.camera_file.string()},
      {"skeleton_file", c.skeleton_file.string()},
      {"schedule_csv", c.schedule_csv.string()},
      {"t_max", c.t_max},
      {"signal_scale", c.signal_scale},
      {"scenario", Json::parse(scenario_to_json_text(c.scenario))},
      {"camera", Json::parse(camera_to_json_text(c.scenario.camera))},
      {"skeleton", Json::parse(skeleton_to_json_text(c.scenario.skeleton))},
      {"denoiser",
       {{"hidden_width", c.denoiser.hidden_width},
        {"hidden_layers", c.denoiser.hidden_layers},
        {"embed_dim", c.denoiser.embed_dim},
        {"target", c.denoiser.target == RegressionTarget::kPredictEps ? "eps" : "y0"}}},
      {"train",
       {{"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"weight_decay", c.train.weight_decay}}},
      {"sampler",
       {{"hypotheses", c.sampler.hypotheses},
        {"iterations", c.sampler.iterations},
        {"sigma_mode", to_string(c.sampler.sigma_mode)},
        {"flip", to_string(c.sampler.flip)},
        {"parallel", c.sampler.parallel}}},
      {"oracle", {{"kind", to_string(c.oracle.kind)}, {"lambda", c.oracle.lambda}, {"sigma_mm", c.oracle.sigma_mm}}},
      {"aggregators", aggregators},
      {"metrics", {{"pck_threshold", c.metrics.pck_threshold}, {"alignment", alignment_name(c.metrics.alignment)}}},
      {"bench", {{"hypotheses", c.bench.hypotheses}, {"iterations", c.bench.iterations}}},
      {"render",
       {{"gt", c.render.gt.string()},
        {"hypotheses", c.render.hypotheses.string()},
        {"stroke_width", c.render.stroke_width}}}};
  return doc.dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json_text(read_text(path, "config"));
}

std::string config_hash(const RunConfig& config) {
  const std::string text = Json::parse(run_config_to_json_text(config)).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const MissingGroundTruth& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingGroundTruth;
  } catch (const TrainingFailure& e) {
    err << "error: training diverged at " << e.what() << '\n';
    return kExitTraining;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (...) {
    err << "error: unknown failure\n";
    return kExitFailure;
  }
}

void write_metric_csv(const std::vector<MetricRow>& rows, std::ostream& out) {
  out << "method,H,K,mpjpe_mm,pmpjpe_mm,pck150,auc\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.hypotheses << ',' << r.iterations << ',' << format_number(r.mpjpe) << ','
        << format_number(r.pmpjpe) << ',' << format_number(r.pck) << ',' << format_number(r.auc) << '\n';
  }
}

InferInputs load_infer_inputs(const std::filesystem::path& dir) {
  InferInputs in;
  std::size_t frames = 1;
  if (std::filesystem::exists(dir / "scenario.json")) {
    ScenarioConfig scenario;
    scenario_from_json_text(read_text(dir / "scenario.json", "scenario manifest"), scenario);
    frames = scenario.frames;
  }
  in.camera = load_camera(dir / "camera.json");
  if (std::filesystem::exists(dir / "skeleton.json")) in.skeleton = load_skeleton(dir / "skeleton.json");
  if (!std::filesystem::exists(dir / "keypoints.jsonl")) {
    throw InvalidArgument("missing keypoints file " + (dir / "keypoints.jsonl").string());
  }
  const PoseSeq2D kp = load_poses2d(dir / "keypoints.jsonl");
  if (kp.joints() != in.skeleton.num_joints()) throw SchemaError("keypoint joint count differs from the skeleton");
  in.keypoints = split(kp, frames);
  if (std::filesystem::exists(dir / "gt.jsonl")) {
    const PoseSeq3D gt = load_poses3d(dir / "gt.jsonl");
    require_same_layout(gt, kp, "dataset");
    in.gt = split(gt, frames);
  }
  return in;
}

InferResult run_inference(const RunConfig& config, const InferInputs& inputs) {
  require_ground_truth_for(config.aggregators, inputs);
  const NoiseSchedule schedule = make_cosine_schedule(config.t_max);
  const DenoiserSource source(config, inputs);
  InferResult result;
  for (std::size_t i = 0; i < inputs.keypoints.size(); ++i) {
    result.hypotheses.push_back(sample_one(config, inputs, source, schedule, i, config.sampler.hypotheses,
                                           config.sampler.iterations));
  }
  result.aggregated = aggregate_all(config.aggregators, result.hypotheses, inputs);
  if (!inputs.gt.empty()) {
    const PoseSeq3D gt = concatenate(inputs.gt);
    for (std::size_t a = 0; a < config.aggregators.size(); ++a) {
      result.rows.push_back(evaluate_row(to_string(config.aggregators[a]), config.sampler.hypotheses,
                                         config.sampler.iterations, result.aggregated[a], gt, config.metrics));
    }
  }
  return result;
}

std::vector<MetricRow> run_bench(const RunConfig& config, const InferInputs& inputs) {
  if (config.bench.hypotheses.empty() || config.bench.iterations.empty()) {
    throw InvalidArgument("benchmark grid is empty");
  }
  for (std::size_t h : config.bench.hypotheses) {
    if (h == 0) throw InvalidArgument("benchmark hypothesis counts must be positive");
  }
  if (inputs.gt.empty()) throw MissingGroundTruth("benchmarking needs ground truth in the dataset");
  const NoiseSchedule schedule = make_cosine_schedule(config.t_max);
  const DenoiserSource source(config, inputs);
  const std::size_t h_max = *std::max_element(config.bench.hypotheses.begin(), config.bench.hypotheses.end());
  const PoseSeq3D gt = concatenate(inputs.gt);
  std::vector<MetricRow> rows;
  for (std::size_t k : config.bench.iterations) {
    std::vector<HypothesisSet> full;
    for (std::size_t i = 0; i < inputs.keypoints.size(); ++i) {
      full.push_back(sample_one(config, inputs, source, schedule, i, h_max, k));
    }
    for (std::size_t h : config.bench.hypotheses) {
      std::vector<HypothesisSet> sets;
      for (const auto& f : full) sets.push_back(prefix(f, h));
      const auto aggregated = aggregate_all(config.aggregators, sets, inputs);
      for (std::size_t a = 0; a < config.aggregators.size(); ++a) {
        rows.push_back(evaluate_row(to_string(config.aggregators[a]), h, k, aggregated[a], gt, config.metrics));
      }
    }
  }
  return rows;
}

std::string render_svg(const PoseSeq3D* gt, const HypothesisSet* hypotheses, std::size_t frame,
                       const CameraIntrinsics& camera, const Skeleton* skeleton, const RenderConfig& style,
                       std::size_t* omitted) {
  if (omitted != nullptr) *omitted = 0;
  const double width = 2.0 * camera.cx;
  const double height = 2.0 * camera.cy;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_number(width) << "\" height=\""
      << svg_number(height) << "\" viewBox=\"0 0 " << svg_number(width) << ' ' << svg_number(height) << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (hypotheses != nullptr) {
    for (std::size_t h = 0; h < hypotheses->count(); ++h) {
      draw_pose(svg, (*hypotheses)[h], frame, camera, skeleton, kPalette[h % std::size(kPalette)], "6,4",
                style.stroke_width, omitted);
    }
  }
  if (gt != nullptr) draw_pose(svg, *gt, frame, camera, skeleton, "#000000", "", style.stroke_width, omitted);
  svg << "</svg>\n";
  return svg.str();
}

int cmd_gen(const RunConfig& config_in, std::ostream& log, std::ostream& err) {
  try {
    RunConfig config = config_in;
    resolve_scene(config, config.scenario.camera, config.scenario.skeleton);
    config.finalize();
    const auto samples = gen_poses(config.scenario);
    save_dataset(samples, config.scenario, config.dataset_dir());
    write_manifest(config, "gen", {{"samples", samples.size()}});
    log << "wrote " << samples.size() << " samples to " << config.dataset_dir().string() << '\n';
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int cmd_train(const RunConfig& config_in, std::ostream& log, std::ostream& err) {
  try {
    RunConfig config = config_in;
    ScenarioConfig scenario;
    const auto samples = load_dataset(config.dataset_dir(), &scenario);
    config.scenario.skeleton = scenario.skeleton;
    config.scenario.camera = scenario.camera;
    resolve_scene(config, config.scenario.camera, config.scenario.skeleton);
    config.finalize();
    config.denoiser.keypoint_center_u = config.scenario.camera.cx;
    config.denoiser.keypoint_center_v = config.scenario.camera.cy;
    config.denoiser.keypoint_scale = config.scenario.camera.fx;

    std::vector<TrainingPair> dataset;
    dataset.reserve(samples.size());
    for (const auto& s : samples) dataset.push_back({s.keypoints, s.gt});
    const NoiseSchedule schedule = make_cosine_schedule(config.t_max);
    maybe_dump_schedule(config, schedule);
    const DenoiserParams init = DenoiserParams::initialize(config.denoiser, derive_stream(config.seed, kInitTag));
    const TrainingResult result = train(dataset, init, config.train, schedule);

    save_checkpoint(result.params, CheckpointInfo{config.signal_scale, config.t_max}, config.checkpoint_path());
    std::ostringstream csv;
    write_loss_csv(result.loss_history, csv);
    write_text(config.out / "loss.csv", csv.str());
    const double final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
    write_manifest(config, "train", {{"final_loss", final_loss}, {"steps", result.loss_history.size()}});
    log << "trained " << result.loss_history.size() << " steps, final loss " << format_number(final_loss) << '\n'
        << "checkpoint: " << config.checkpoint_path().string() << '\n';
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int cmd_infer(const RunConfig& config_in, std::ostream& log, std::ostream& err) {
  try {
    RunConfig config = config_in;
    InferInputs inputs = load_infer_inputs(config.dataset_dir());
    resolve_scene(config, inputs.camera, inputs.skeleton);
    config.scenario.skeleton = inputs.skeleton;
    config.scenario.camera = inputs.camera;
    config.finalize();
    maybe_dump_schedule(config, make_cosine_schedule(config.t_max));
    const InferResult result = run_inference(config, inputs);

    for (std::size_t i = 0; i < result.hypotheses.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%05zu", i);
      save_hypotheses(result.hypotheses[i], config.out / "hypotheses" / name);
    }
    std::filesystem::create_directories(config.out / "aggregated");
    Json methods = Json::array();
    for (std::size_t a = 0; a < config.aggregators.size(); ++a) {
      const std::string name = to_string(config.aggregators[a]);
      save_poses(result.aggregated[a], config.out / "aggregated" / (name + ".jsonl"));
      Json entry{{"method", name},
                 {"pose_file", "aggregated/" + name + ".jsonl"},
                 {"requires_ground_truth", requires_ground_truth(config.aggregators[a])},
                 {"feasible_in_production", !requires_ground_truth(config.aggregators[a])}};
      if (a < result.rows.size()) {
        const auto& r = result.rows[a];
        entry["mpjpe_mm"] = r.mpjpe;
        entry["pmpjpe_mm"] = r.pmpjpe;
        entry["pck150"] = r.pck;
        entry["auc"] = r.auc;
      }
      methods.push_back(entry);
    }
    write_text(config.out / "report.json",
               Json{{"samples", result.hypotheses.size()},
                    {"H", config.sampler.hypotheses},
                    {"K", config.sampler.iterations},
                    {"denoiser", config.oracle.kind == OracleKind::kNone ? "checkpoint" : to_string(config.oracle.kind)},
                    {"methods", methods}}
                       .dump(2) +
                   "\n");
    if (!result.rows.empty()) {
      std::ostringstream csv;
      write_metric_csv(result.rows, csv);
      write_text(config.out / "metrics.csv", csv.str());
      log << csv.str();
    }
    write_manifest(config, "infer", {{"samples", result.hypotheses.size()}});
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int cmd_bench(const RunConfig& config_in, std::ostream& log, std::ostream& err) {
  try {
    RunConfig config = config_in;
    InferInputs inputs = load_infer_inputs(config.dataset_dir());
    resolve_scene(config, inputs.camera, inputs.skeleton);
    config.scenario.skeleton = inputs.skeleton;
    config.scenario.camera = inputs.camera;
    config.finalize();
    const auto rows = run_bench(config, inputs);
    std::ostringstream csv;
    write_metric_csv(rows, csv);
    write_text(config.out / "bench.csv", csv.str());
    write_manifest(config, "bench", {{"rows", rows.size()}});
    log << csv.str();
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int cmd_render(const RunConfig& config_in, std::ostream& log, std::ostream& err) {
  try {
    RunConfig config = config_in;
    if (config.render.gt.empty() && config.render.hypotheses.empty()) {
      throw InvalidArgument("render needs a ground-truth pose file or a hypothesis directory");
    }
    CameraIntrinsics camera;
    Skeleton skeleton = Skeleton::h36m();
    const auto dataset = config.dataset_dir();
    if (config.camera_file.empty() && std::filesystem::exists(dataset / "camera.json")) {
      camera = load_camera(dataset / "camera.json");
    }
    if (config.skeleton_file.empty() && std::filesystem::exists(dataset / "skeleton.json")) {
      skeleton = load_skeleton(dataset / "skeleton.json");
    }
    resolve_scene(config, camera, skeleton);
    camera.validate();

    std::optional<PoseSeq3D> gt;
    std::optional<HypothesisSet> hyps;
    if (!config.render.gt.empty()) gt = load_poses3d(config.render.gt);
    if (!config.render.hypotheses.empty()) hyps = load_hypotheses(config.render.hypotheses);
    const std::size_t frames = gt ? gt->frames() : hyps->frames();
    const std::size_t joints = gt ? gt->joints() : hyps->joints();
    if (gt && hyps) require_same_layout(*gt, (*hyps)[0], "render inputs");
    const Skeleton* bones = skeleton.num_joints() == joints ? &skeleton : nullptr;

    std::filesystem::create_directories(config.out / "render");
    for (std::size_t f = 0; f < frames; ++f) {
      std::size_t omitted = 0;
      const std::string svg = render_svg(gt ? &*gt : nullptr, hyps ? &*hyps : nullptr, f, camera, bones,
                                         config.render, &omitted);
      if (omitted > 0) err << "warning: frame " << f << ": " << omitted << " joint(s) behind the camera omitted\n";
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05zu.svg", f);
      write_text(config.out / "render" / name, svg);
    }
    write_manifest(config, "render", {{"frames", frames}});
    log << "wrote " << frames << " SVG file(s) to " << (config.out / "render").string() << '\n';
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace poselift
