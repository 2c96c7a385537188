#include "poselift/mlp.hpp"

#include <cmath>
#include <string>

#include "poselift/rng.hpp"

namespace poselift {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

MatrixXd silu(const MatrixXd& z) { return z.array() / (1.0 + (-z.array()).exp()); }

MatrixXd silu_grad(const MatrixXd& z) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

MlpConfig normalized(MlpConfig config) {
  if (config.joints == 0) throw InvalidArgument("denoiser needs at least one joint");
  if (config.hidden_width == 0 || config.hidden_layers == 0) {
    throw InvalidArgument("denoiser needs at least one hidden layer of nonzero width");
  }
  if (config.embed_dim == 0) config.embed_dim = config.hidden_width;
  if (config.embed_dim % 2 != 0) throw InvalidArgument("timestep embedding dimension must be even");
  if (!(config.keypoint_scale > 0.0)) throw InvalidArgument("keypoint scale must be positive");
  return config;
}

// Stacked per-frame activations of a batch, one column per frame.
struct Batch {
  MatrixXd input;      // J*5 x B
  MatrixXd embedding;  // embed_dim x B
  MatrixXd target;     // J*3 x B (empty when not training)
};

void fill_columns(const DenoiserParams& params, const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t,
                  Batch& batch, Index first_col) {
  const auto& cfg = params.config();
  require_same_layout(noisy, keypoints, "denoiser input");
  if (noisy.joints() != cfg.joints) {
    throw ShapeError("denoiser expects " + std::to_string(cfg.joints) + " joints, got " +
                     std::to_string(noisy.joints()));
  }
  const Eigen::VectorXd emb = timestep_embed(t, params.embed_dim());
  for (std::size_t n = 0; n < noisy.frames(); ++n) {
    const Index col = first_col + idx(n);
    for (std::size_t j = 0; j < cfg.joints; ++j) {
      const auto y = noisy.at(n, j);
      const auto x = keypoints.at(n, j);
      const Index row = idx(j * 5);
      batch.input(row + 0, col) = y.x();
      batch.input(row + 1, col) = y.y();
      batch.input(row + 2, col) = y.z();
      batch.input(row + 3, col) = (x.x() - cfg.keypoint_center_u) / cfg.keypoint_scale;
      batch.input(row + 4, col) = (x.y() - cfg.keypoint_center_v) / cfg.keypoint_scale;
    }
    batch.embedding.col(col) = emb;
  }
}

Batch make_batch(const DenoiserParams& params, std::span<const TrainingExample> examples) {
  Index cols = 0;
  for (const auto& ex : examples) cols += idx(ex.noisy.frames());
  Batch batch{MatrixXd(idx(params.input_dim()), cols), MatrixXd(idx(params.embed_dim()), cols),
              MatrixXd(idx(params.output_dim()), cols)};
  Index col = 0;
  for (const auto& ex : examples) {
    require_same_layout(ex.noisy, ex.target, "training target");
    fill_columns(params, ex.noisy, ex.keypoints, ex.t, batch, col);
    for (std::size_t n = 0; n < ex.target.frames(); ++n) {
      for (std::size_t j = 0; j < ex.target.joints(); ++j) {
        batch.target.block<3, 1>(idx(j * 3), col + idx(n)) = ex.target.at(n, j);
      }
    }
    col += idx(ex.noisy.frames());
  }
  return batch;
}

struct Activations {
  std::vector<MatrixXd> pre;   // hidden pre-activations
  std::vector<MatrixXd> post;  // hidden activations
  MatrixXd output;
};

void check_finite(const MatrixXd& m, std::size_t layer) {
  if (!m.allFinite()) throw NumericError(layer, "non-finite activation");
}

Activations forward(const DenoiserParams& params, const Batch& batch) {
  Activations act;
  const std::size_t hidden = params.config().hidden_layers;
  MatrixXd z = params.weight(0) * batch.input;
  z.colwise() += params.bias(0);
  if (params.has_embed_projection()) {
    z += params.embed_projection() * batch.embedding;
  } else {
    z += batch.embedding;
  }
  for (std::size_t layer = 0; layer < hidden; ++layer) {
    if (layer > 0) {
      z = params.weight(layer) * act.post.back();
      z.colwise() += params.bias(layer);
    }
    check_finite(z, layer);
    act.post.push_back(silu(z));
    act.pre.push_back(std::move(z));
  }
  act.output = params.weight(hidden) * act.post.back();
  act.output.colwise() += params.bias(hidden);
  check_finite(act.output, hidden);
  return act;
}

}  // namespace

DenoiserParams::DenoiserParams(const MlpConfig& config) : config_(normalized(config)) {
  std::size_t offset = 0;
  const auto add = [&](std::size_t rows, std::size_t cols) {
    Block b{offset, rows, cols};
    offset += rows * cols;
    return b;
  };
  std::size_t in = input_dim();
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const std::size_t out = layer + 1 == layer_count() ? output_dim() : config_.hidden_width;
    weights_.push_back(add(out, in));
    biases_.push_back(add(out, 1));
    in = out;
  }
  if (has_embed_projection()) projection_ = add(config_.hidden_width, config_.embed_dim);
  values_.assign(offset, 0.0);
}

DenoiserParams DenoiserParams::initialize(const MlpConfig& config, std::uint64_t seed) {
  DenoiserParams params(config);
  RngStream rng(seed, derive_stream(0x696e6974ull, 0));
  for (std::size_t layer = 0; layer < params.layer_count(); ++layer) {
    auto w = params.weight(layer);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
  }
  if (params.has_embed_projection()) {
    auto p = params.embed_projection();
    const double stddev = 1.0 / std::sqrt(static_cast<double>(p.cols()));
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = stddev * rng.normal();
  }
  return params;
}

DenoiserParams::MatrixMap DenoiserParams::weight(std::size_t layer) {
  const Block& b = weights_.at(layer);
  return MatrixMap(values_.data() + b.offset, idx(b.rows), idx(b.cols));
}
DenoiserParams::ConstMatrixMap DenoiserParams::weight(std::size_t layer) const {
  const Block& b = weights_.at(layer);
  return ConstMatrixMap(values_.data() + b.offset, idx(b.rows), idx(b.cols));
}
DenoiserParams::VectorMap DenoiserParams::bias(std::size_t layer) {
  const Block& b = biases_.at(layer);
  return VectorMap(values_.data() + b.offset, idx(b.rows));
}
DenoiserParams::ConstVectorMap DenoiserParams::bias(std::size_t layer) const {
  const Block& b = biases_.at(layer);
  return ConstVectorMap(values_.data() + b.offset, idx(b.rows));
}
DenoiserParams::MatrixMap DenoiserParams::embed_projection() {
  if (!has_embed_projection()) throw InvalidArgument("model has no embedding projection");
  return MatrixMap(values_.data() + projection_.offset, idx(projection_.rows), idx(projection_.cols));
}
DenoiserParams::ConstMatrixMap DenoiserParams::embed_projection() const {
  if (!has_embed_projection()) throw InvalidArgument("model has no embedding projection");
  return ConstMatrixMap(values_.data() + projection_.offset, idx(projection_.rows), idx(projection_.cols));
}

bool DenoiserParams::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool DenoiserParams::operator==(const DenoiserParams& other) const {
  const auto& a = config_;
  const auto& b = other.config_;
  return a.joints == b.joints && a.hidden_width == b.hidden_width && a.hidden_layers == b.hidden_layers &&
         a.embed_dim == b.embed_dim && a.target == b.target && a.keypoint_center_u == b.keypoint_center_u &&
         a.keypoint_center_v == b.keypoint_center_v && a.keypoint_scale == b.keypoint_scale &&
         values_ == other.values_;
}

PoseSeq3D mlp_forward(const DenoiserParams& params, const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t) {
  Batch batch{MatrixXd(idx(params.input_dim()), idx(noisy.frames())),
              MatrixXd(idx(params.embed_dim()), idx(noisy.frames())), MatrixXd()};
  fill_columns(params, noisy, keypoints, t, batch, 0);
  const Activations act = forward(params, batch);
  PoseSeq3D out(noisy.frames(), noisy.joints());
  for (std::size_t n = 0; n < noisy.frames(); ++n) {
    for (std::size_t j = 0; j < noisy.joints(); ++j) {
      out.at(n, j) = act.output.block<3, 1>(idx(j * 3), idx(n));
    }
  }
  return out;
}

PoseSeq3D MlpDenoiser::predict(const PoseSeq3D& noisy, const PoseSeq2D& keypoints, int t, const DenoiseCall&) const {
  schedule_.check_timestep(t);
  PoseSeq3D raw = mlp_forward(params_, noisy, keypoints, t);
  if (params_.config().target == RegressionTarget::kPredictEps) return eps_to_y0(noisy, raw, t, schedule_);
  return raw;
}

HypothesisSet denoise(const HypothesisSet& noisy, const PoseSeq2D& keypoints, int t, const DenoiserParams& model,
                      RegressionTarget target, const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_layout(noisy[0], keypoints, "denoise");
  std::vector<PoseSeq3D> out;
  out.reserve(noisy.count());
  for (const auto& y : noisy) {
    PoseSeq3D raw = mlp_forward(model, y, keypoints, t);
    out.push_back(target == RegressionTarget::kPredictEps ? eps_to_y0(y, raw, t, schedule) : std::move(raw));
  }
  return HypothesisSet(std::move(out));
}

double loss_mse(const HypothesisSet& pred, const PoseSeq3D& gt) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& h : pred) {
    require_same_layout(h, gt, "loss_mse");
    const auto a = h.values();
    const auto b = gt.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      sum += d * d;
    }
    count += a.size();
  }
  if (count == 0) throw ShapeError("loss_mse: empty input");
  return sum / static_cast<double>(count);
}

double batch_loss(const DenoiserParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const Batch stacked = make_batch(params, batch);
  const Activations act = forward(params, stacked);
  return (act.output - stacked.target).squaredNorm() / static_cast<double>(act.output.size());
}

DenoiserParams grad_loss(const DenoiserParams& params, std::span<const TrainingExample> batch, double* loss) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const Batch stacked = make_batch(params, batch);
  const Activations act = forward(params, stacked);
  const MatrixXd residual = act.output - stacked.target;
  const double count = static_cast<double>(residual.size());
  if (loss != nullptr) *loss = residual.squaredNorm() / count;

  DenoiserParams grad(params.config());
  const std::size_t hidden = params.config().hidden_layers;

  MatrixXd delta = (2.0 / count) * residual;  // dL/d(output)
  grad.weight(hidden) = delta * act.post[hidden - 1].transpose();
  grad.bias(hidden) = delta.rowwise().sum();
  MatrixXd upstream = params.weight(hidden).transpose() * delta;

  for (std::size_t layer = hidden; layer-- > 0;) {
    delta = upstream.cwiseProduct(silu_grad(act.pre[layer]));
    check_finite(delta, layer);
    const MatrixXd& below = layer == 0 ? stacked.input : act.post[layer - 1];
    grad.weight(layer) = delta * below.transpose();
    grad.bias(layer) = delta.rowwise().sum();
    if (layer > 0) upstream = params.weight(layer).transpose() * delta;
  }
  if (params.has_embed_projection()) {
    // delta now holds dL/d(first pre-activation).
    grad.embed_projection() = delta * stacked.embedding.transpose();
  }
  return grad;
}

}  // namespace poselift
