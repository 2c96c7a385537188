#include "poselift/train.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "poselift/rng.hpp"

namespace poselift {

AdamW::AdamW(std::size_t parameter_count, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      weight_decay_(config.weight_decay),
      epsilon_(config.adam_epsilon),
      first_moment_(parameter_count, 0.0),
      second_moment_(parameter_count, 0.0) {
  if (!(lr_ >= 0.0)) throw InvalidArgument("learning rate must be non-negative");
  if (!(beta1_ >= 0.0 && beta1_ < 1.0) || !(beta2_ >= 0.0 && beta2_ < 1.0)) {
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  }
}

void AdamW::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != first_moment_.size() || grad.size() != params.size()) {
    throw ShapeError("optimizer parameter count mismatch");
  }
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const double decay = 1.0 - lr_ * weight_decay_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_moment_[i] = beta1_ * first_moment_[i] + (1.0 - beta1_) * grad[i];
    second_moment_[i] = beta2_ * second_moment_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = first_moment_[i] / correction1;
    const double v_hat = second_moment_[i] / correction2;
    params[i] = params[i] * decay - lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

TrainingResult train(const std::vector<TrainingPair>& dataset, DenoiserParams init, const TrainConfig& config,
                     const NoiseSchedule& schedule) {
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
  const SignalScaling scaling{config.signal_scale};
  const RegressionTarget target = init.config().target;

  std::vector<PoseSeq3D> clean;
  clean.reserve(dataset.size());
  for (const auto& pair : dataset) {
    require_same_layout(pair.pose_mm, pair.keypoints, "training pair");
    clean.push_back(scaling.encode(pair.pose_mm));
  }

  RngStream order_rng(config.seed, derive_stream(0x747261696eull, 0));
  RngStream time_rng(config.seed, derive_stream(0x747261696eull, 1));
  RngStream noise_rng(config.seed, derive_stream(0x747261696eull, 2));

  std::vector<std::size_t> order(dataset.size());
  std::size_t cursor = order.size();
  const auto next_index = [&] {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      cursor = 0;
    }
    return order[cursor++];
  };

  TrainingResult result{std::move(init), {}};
  result.loss_history.reserve(config.steps);
  AdamW optimizer(result.params.parameter_count(), config);
  std::vector<TrainingExample> batch(std::min(config.batch_size, dataset.size()));

  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& example : batch) {
      const std::size_t i = next_index();
      const int t = static_cast<int>(time_rng.below(static_cast<std::uint64_t>(schedule.t_max()) + 1));
      PoseSeq3D eps(clean[i].frames(), clean[i].joints());
      noise_rng.fill_normal(eps.values());
      example.noisy = diffuse(clean[i], t, schedule, eps);
      example.keypoints = dataset[i].keypoints;
      example.t = t;
      example.target = target == RegressionTarget::kPredictEps ? std::move(eps) : clean[i];
    }
    double loss = 0.0;
    DenoiserParams grad = [&] {
      try {
        return grad_loss(result.params, batch, &loss);
      } catch (const NumericError& e) {
        throw TrainingFailure(step, e.what());
      }
    }();
    if (!std::isfinite(loss)) throw TrainingFailure(step, "loss is not finite");
    result.loss_history.push_back(loss);
    optimizer.step(result.params.flat(), grad.flat());
    if (!result.params.all_finite()) throw TrainingFailure(step, "parameters diverged");
  }
  return result;
}

void write_loss_csv(const std::vector<double>& history, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "step,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
  out.precision(old_precision);
}

namespace {

using Json = nlohmann::json;

constexpr const char* kFormat = "poselift-mlp";

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace

void write_checkpoint(const DenoiserParams& params, const CheckpointInfo& info, std::ostream& out) {
  const auto& cfg = params.config();
  const Json header{{"format", kFormat},
                    {"version", 1},
                    {"joints", cfg.joints},
                    {"hidden_width", cfg.hidden_width},
                    {"hidden_layers", cfg.hidden_layers},
                    {"embed_dim", cfg.embed_dim},
                    {"target", cfg.target == RegressionTarget::kPredictEps ? "eps" : "y0"},
                    {"activation", "silu"},
                    {"keypoint_center", {cfg.keypoint_center_u, cfg.keypoint_center_v}},
                    {"keypoint_scale", cfg.keypoint_scale},
                    {"signal_scale", info.signal_scale},
                    {"t_max", info.t_max},
                    {"loss_units", "normalized"},
                    {"dtype", "float64-le"},
                    {"parameter_count", params.parameter_count()}};
  out << header.dump() << '\n';
  for (double v : params.flat()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw Error("failed writing checkpoint");
}

DenoiserParams read_checkpoint(std::istream& in, CheckpointInfo* info) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty checkpoint");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw ParseError(1, std::string("checkpoint header: ") + e.what());
  }
  MlpConfig cfg;
  std::size_t count = 0;
  try {
    if (header.at("format").get<std::string>() != kFormat) throw SchemaError("not a poselift checkpoint");
    cfg.joints = header.at("joints").get<std::size_t>();
    cfg.hidden_width = header.at("hidden_width").get<std::size_t>();
    cfg.hidden_layers = header.at("hidden_layers").get<std::size_t>();
    cfg.embed_dim = header.at("embed_dim").get<std::size_t>();
    const auto target = header.at("target").get<std::string>();
    if (target != "y0" && target != "eps") throw SchemaError("unknown regression target '" + target + "'");
    cfg.target = target == "eps" ? RegressionTarget::kPredictEps : RegressionTarget::kPredictY0;
    cfg.keypoint_center_u = header.at("keypoint_center").at(0).get<double>();
    cfg.keypoint_center_v = header.at("keypoint_center").at(1).get<double>();
    cfg.keypoint_scale = header.at("keypoint_scale").get<double>();
    count = header.at("parameter_count").get<std::size_t>();
    if (info != nullptr) {
      info->signal_scale = header.at("signal_scale").get<double>();
      info->t_max = header.at("t_max").get<int>();
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  }
  DenoiserParams params(cfg);
  if (params.parameter_count() != count) {
    throw SchemaError("checkpoint declares " + std::to_string(count) + " parameters, shapes imply " +
                      std::to_string(params.parameter_count()));
  }
  for (double& v : params.flat()) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw SchemaError("checkpoint payload is truncated");
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes, 8);
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw SchemaError("checkpoint has trailing bytes");
  return params;
}

void save_checkpoint(const DenoiserParams& params, const CheckpointInfo& info, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
  write_checkpoint(params, info, out);
}

DenoiserParams load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  return read_checkpoint(in, info);
}

}  // namespace poselift
