#include "poselift/denoiser.hpp"

#include <cmath>
#include <string>

#include "poselift/rng.hpp"

namespace poselift {

Eigen::VectorXd timestep_embed(int t, std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw InvalidArgument("embedding dimension must be even and >= 2, got " + std::to_string(dim));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    const double angle = static_cast<double>(t) / freq;
    out(static_cast<Eigen::Index>(2 * i)) = std::sin(angle);
    out(static_cast<Eigen::Index>(2 * i + 1)) = std::cos(angle);
  }
  return out;
}

PoseSeq3D eps_to_y0(const PoseSeq3D& noisy, const PoseSeq3D& eps, int t, const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_layout(noisy, eps, "eps_to_y0");
  const double signal = std::sqrt(schedule.alpha_bar(t));
  const double noise = std::sqrt(1.0 - schedule.alpha_bar(t));
  PoseSeq3D out(noisy.frames(), noisy.joints());
  auto dst = out.values();
  const auto y = noisy.values();
  const auto e = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (y[i] - noise * e[i]) / signal;
  return out;
}

PoseSeq3D y0_to_eps(const PoseSeq3D& noisy, const PoseSeq3D& y0, int t, const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  if (t == 0) throw InvalidArgument("noise is undefined at t = 0");
  require_same_layout(noisy, y0, "y0_to_eps");
  const double signal = std::sqrt(schedule.alpha_bar(t));
  const double noise = std::sqrt(1.0 - schedule.alpha_bar(t));
  PoseSeq3D out(noisy.frames(), noisy.joints());
  auto dst = out.values();
  const auto y = noisy.values();
  const auto c = y0.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (y[i] - signal * c[i]) / noise;
  return out;
}

HypothesisSet denoise(const HypothesisSet& noisy, const PoseSeq2D& keypoints, int t, const Denoiser& model,
                      std::size_t iteration, bool flipped) {
  require_same_layout(noisy[0], keypoints, "denoise");
  std::vector<PoseSeq3D> out;
  out.reserve(noisy.count());
  for (std::size_t h = 0; h < noisy.count(); ++h) {
    out.push_back(model.predict(noisy[h], keypoints, t, DenoiseCall{h, iteration, flipped}));
  }
  return HypothesisSet(std::move(out));
}

namespace {

class OracleBase : public Denoiser {
 public:
  OracleBase(const PoseSeq3D& gt_mm, SignalScaling scaling, std::optional<Skeleton> skeleton)
      : scaling_(scaling), gt_(scaling.encode(gt_mm)) {
    if (skeleton) gt_flipped_ = flip_pose3d(gt_, *skeleton);
  }

 protected:
  const PoseSeq3D& truth(const PoseSeq3D& noisy, bool flipped) const {
    require_same_layout(noisy, gt_, "oracle denoiser");
    if (!flipped) return gt_;
    if (!gt_flipped_) throw InvalidArgument("oracle was built without a skeleton and cannot answer flipped calls");
    return *gt_flipped_;
  }

  SignalScaling scaling_;

 private:
  PoseSeq3D gt_;
  std::optional<PoseSeq3D> gt_flipped_;
};

class PerfectOracle final : public OracleBase {
 public:
  using OracleBase::OracleBase;

  PoseSeq3D predict(const PoseSeq3D& noisy, const PoseSeq2D&, int, const DenoiseCall& call) const override {
    return truth(noisy, call.flipped);
  }
};

class ContractiveOracle final : public OracleBase {
 public:
  ContractiveOracle(const PoseSeq3D& gt_mm, double lambda, SignalScaling scaling, std::optional<Skeleton> skeleton)
      : OracleBase(gt_mm, scaling, std::move(skeleton)), lambda_(lambda) {}

  PoseSeq3D predict(const PoseSeq3D& noisy, const PoseSeq2D&, int, const DenoiseCall& call) const override {
    const PoseSeq3D& gt = truth(noisy, call.flipped);
    PoseSeq3D out(gt.frames(), gt.joints());
    auto dst = out.values();
    const auto g = gt.values();
    const auto y = noisy.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = lambda_ * g[i] + (1.0 - lambda_) * y[i];
    return out;
  }

 private:
  double lambda_;
};

class NoisyOracle final : public OracleBase {
 public:
  NoisyOracle(const PoseSeq3D& gt_mm, std::vector<double> sigma_mm, std::uint64_t seed, SignalScaling scaling,
              std::optional<Skeleton> skeleton)
      : OracleBase(gt_mm, scaling, std::move(skeleton)), sigma_mm_(std::move(sigma_mm)), seed_(seed) {}

  PoseSeq3D predict(const PoseSeq3D& noisy, const PoseSeq2D&, int, const DenoiseCall& call) const override {
    PoseSeq3D out = truth(noisy, call.flipped);
    const std::uint64_t stream = derive_stream(derive_stream(0x6f7261636c65ull, call.hypothesis), call.flipped);
    RngStream rng(seed_, stream, static_cast<std::uint64_t>(call.iteration) * out.size());
    for (std::size_t n = 0; n < out.frames(); ++n) {
      for (std::size_t j = 0; j < out.joints(); ++j) {
        const double sigma = scaling_.to_signal(sigma_mm_.size() == 1 ? sigma_mm_[0] : sigma_mm_[j]);
        auto p = out.at(n, j);
        for (int d = 0; d < 3; ++d) p[d] += sigma * rng.normal();
      }
    }
    return out;
  }

 private:
  std::vector<double> sigma_mm_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<Denoiser> oracle_perfect(const PoseSeq3D& gt_mm, SignalScaling scaling,
                                         std::optional<Skeleton> skeleton) {
  return std::make_unique<PerfectOracle>(gt_mm, scaling, std::move(skeleton));
}

std::unique_ptr<Denoiser> oracle_contractive(const PoseSeq3D& gt_mm, double lambda, SignalScaling scaling,
                                             std::optional<Skeleton> skeleton) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw InvalidArgument("contraction factor must lie in [0, 1), got " + std::to_string(lambda));
  }
  return std::make_unique<ContractiveOracle>(gt_mm, lambda, scaling, std::move(skeleton));
}

std::unique_ptr<Denoiser> oracle_noisy(const PoseSeq3D& gt_mm, std::vector<double> sigma_mm, std::uint64_t seed,
                                       SignalScaling scaling, std::optional<Skeleton> skeleton) {
  if (sigma_mm.empty()) sigma_mm.push_back(0.0);
  if (sigma_mm.size() != 1 && sigma_mm.size() != gt_mm.joints()) {
    throw InvalidArgument("noisy oracle needs one sigma or one per joint");
  }
  for (double s : sigma_mm) {
    if (!(s >= 0.0)) throw InvalidArgument("noisy oracle sigma must be non-negative");
  }
  return std::make_unique<NoisyOracle>(gt_mm, std::move(sigma_mm), seed, scaling, std::move(skeleton));
}

}  // namespace poselift
