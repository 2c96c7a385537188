#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poselift/cli.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> checkpoint;
  std::optional<std::string> camera;
  std::optional<std::size_t> hypotheses;
  std::optional<std::size_t> iterations;
  std::optional<std::string> aggregators;
  std::optional<std::string> oracle;
  std::optional<std::string> flip;
  std::optional<std::string> sigma_mode;
  std::optional<std::string> schedule_csv;
  std::optional<std::size_t> steps;
  std::optional<std::string> gt;
  std::optional<std::string> hypotheses_dir;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run config");
  cmd->add_option("--seed", o.seed, "top-level seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--dataset", o.dataset, "dataset directory (default <out>/dataset)");
  cmd->add_option("--checkpoint", o.checkpoint, "checkpoint path (default <out>/checkpoint.bin)");
  cmd->add_option("--camera", o.camera, "camera intrinsics JSON");
  cmd->add_option("--hypotheses", o.hypotheses, "number of hypotheses H");
  cmd->add_option("--iterations", o.iterations, "number of sampling iterations K");
  cmd->add_option("--aggregator", o.aggregators, "comma-separated list of avg,ppma,jpma,pbest,jbest");
  cmd->add_option("--oracle", o.oracle, "oracle denoiser: perfect, contractive or noisy");
  cmd->add_option("--flip", o.flip, "flip augmentation: none, once or diffusion");
  cmd->add_option("--sigma-mode", o.sigma_mode, "DDIM stochasticity: paper or deterministic");
  cmd->add_option("--schedule-csv", o.schedule_csv, "also write the noise schedule as CSV");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

poselift::RunConfig build_config(const Overrides& o) {
  poselift::RunConfig c = o.config.empty() ? poselift::RunConfig{} : poselift::load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.dataset) c.dataset = *o.dataset;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  if (o.camera) c.camera_file = *o.camera;
  if (o.hypotheses) c.sampler.hypotheses = *o.hypotheses;
  if (o.iterations) c.sampler.iterations = *o.iterations;
  if (o.aggregators) {
    c.aggregators.clear();
    for (const auto& name : split_list(*o.aggregators)) c.aggregators.push_back(poselift::parse_aggregator(name));
  }
  if (o.oracle) c.oracle.kind = poselift::parse_oracle(*o.oracle);
  if (o.flip) c.sampler.flip = poselift::parse_flip_mode(*o.flip);
  if (o.sigma_mode) c.sampler.sigma_mode = poselift::parse_sigma_mode(*o.sigma_mode);
  if (o.schedule_csv) c.schedule_csv = *o.schedule_csv;
  if (o.steps) c.train.steps = *o.steps;
  if (o.gt) c.render.gt = *o.gt;
  if (o.hypotheses_dir) c.render.hypotheses = *o.hypotheses_dir;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hypothesis 3D pose lifting with diffusion sampling and reprojection-based aggregation"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  auto* train = app.add_subcommand("train", "train the MLP denoiser on a dataset");
  auto* infer = app.add_subcommand("infer", "sample hypotheses, aggregate and evaluate");
  auto* bench = app.add_subcommand("bench", "sweep H and K and write bench.csv");
  auto* render = app.add_subcommand("render", "draw poses as SVG, one file per frame");
  for (auto* cmd : {gen, train, infer, bench, render}) add_common(cmd, o);
  train->add_option("--steps", o.steps, "optimizer steps");
  render->add_option("--gt", o.gt, "ground-truth 3D pose file");
  render->add_option("--hypotheses-dir", o.hypotheses_dir, "hypothesis directory written by infer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : poselift::kExitConfig;
  }

  poselift::RunConfig config;
  try {
    config = build_config(o);
  } catch (...) {
    return poselift::exit_code_for_current_exception(std::cerr);
  }

  if (gen->parsed()) return poselift::cmd_gen(config, std::cout, std::cerr);
  if (train->parsed()) return poselift::cmd_train(config, std::cout, std::cerr);
  if (infer->parsed()) return poselift::cmd_infer(config, std::cout, std::cerr);
  if (bench->parsed()) return poselift::cmd_bench(config, std::cout, std::cerr);
  return poselift::cmd_render(config, std::cout, std::cerr);
}
