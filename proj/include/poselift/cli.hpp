#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "poselift/aggregate.hpp"
#include "poselift/metrics.hpp"
#include "poselift/mlp.hpp"
#include "poselift/sampler.hpp"
#include "poselift/synth.hpp"
#include "poselift/train.hpp"

namespace poselift {

enum class OracleKind { kNone, kPerfect, kContractive, kNoisy };

std::string to_string(OracleKind kind);
OracleKind parse_oracle(const std::string& name);

struct OracleConfig {
  OracleKind kind = OracleKind::kNone;
  double lambda = 0.5;      // contractive
  double sigma_mm = 20.0;   // noisy
};

struct BenchGrid {
  std::vector<std::size_t> hypotheses{1, 5, 10, 20};
  std::vector<std::size_t> iterations{1, 5, 10};
};

struct RenderConfig {
  std::filesystem::path gt;          // 3D pose file drawn solid
  std::filesystem::path hypotheses;  // directory from save_hypotheses, optional
  double stroke_width = 2.0;
};

/// Every knob of a run. T_max, the signal scale and the seed live at the top
/// level and are copied into the module configs, so they cannot disagree.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  std::filesystem::path dataset;     // defaults to <out>/dataset
  std::filesystem::path checkpoint;  // defaults to <out>/checkpoint.bin
  std::filesystem::path camera_file;
  std::filesystem::path skeleton_file;
  std::filesystem::path schedule_csv;  // optional dump of the noise schedule
  int t_max = 1000;
  double signal_scale = kDefaultSignalScale;
  ScenarioConfig scenario;
  MlpConfig denoiser;
  TrainConfig train;
  SamplerConfig sampler;
  OracleConfig oracle;
  std::vector<Aggregator> aggregators{Aggregator::kAverage, Aggregator::kPpma, Aggregator::kJpma,
                                      Aggregator::kPbest, Aggregator::kJbest};
  MetricOptions metrics;
  BenchGrid bench;
  RenderConfig render;

  std::filesystem::path dataset_dir() const { return dataset.empty() ? out / "dataset" : dataset; }
  std::filesystem::path checkpoint_path() const { return checkpoint.empty() ? out / "checkpoint.bin" : checkpoint; }
  /// Copies the shared fields into the module configs and validates them.
  void finalize();
};

/// Parses a config document; absent keys keep their defaults. Relative paths
/// stay relative to the working directory.
RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json_text(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTraining = 3;
inline constexpr int kExitMissingGroundTruth = 4;

/// Maps the active exception to an exit code and prints it to `err`.
int exit_code_for_current_exception(std::ostream& err);

/// One row of metrics.csv / bench.csv.
struct MetricRow {
  std::string method;
  std::size_t hypotheses = 0;
  std::size_t iterations = 0;
  double mpjpe = 0.0;
  double pmpjpe = 0.0;
  double pck = 0.0;
  double auc = 0.0;
};

void write_metric_csv(const std::vector<MetricRow>& rows, std::ostream& out);

/// Inference inputs, read from a dataset directory. Ground truth is optional.
struct InferInputs {
  std::vector<PoseSeq2D> keypoints;
  std::vector<PoseSeq3D> gt;  // empty when the dataset has no gt.jsonl
  CameraIntrinsics camera;
  Skeleton skeleton = Skeleton::h36m();
};

InferInputs load_infer_inputs(const std::filesystem::path& dataset_dir);

struct InferResult {
  std::vector<HypothesisSet> hypotheses;  // one set per sample
  /// Aggregated poses per requested aggregator, samples concatenated along frames.
  std::vector<PoseSeq3D> aggregated;
  std::vector<MetricRow> rows;  // empty without ground truth
};

/// The library pipeline behind `infer` and `bench`: sample every input with
/// the configured denoiser, aggregate, evaluate. Sample i uses seed
/// derive_stream(config.seed, i).
InferResult run_inference(const RunConfig& config, const InferInputs& inputs);

/// Sweep over config.bench; one row per (H, K, aggregator). Hypothesis h of
/// a sample is the same for every H, so larger H only adds hypotheses.
std::vector<MetricRow> run_bench(const RunConfig& config, const InferInputs& inputs);

/// SVG drawing of one frame: gt solid black, each hypothesis dashed in its own
/// color. Joints that project behind the camera are left out and reported in
/// `omitted`.
std::string render_svg(const PoseSeq3D* gt, const HypothesisSet* hypotheses, std::size_t frame,
                       const CameraIntrinsics& camera, const Skeleton* skeleton, const RenderConfig& style,
                       std::size_t* omitted = nullptr);

// Subcommands. Each writes its outputs under config.out plus manifest_<command>.json
// recording the command, seed and config hash, and returns an exit code.
int cmd_gen(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_infer(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_bench(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_render(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace poselift
