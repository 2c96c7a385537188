#include "poselift/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include <json.hpp>

#include "poselift/pose_io.hpp"

namespace poselift {

std::string to_string(SigmaMode mode) { return mode == SigmaMode::kPaper ? "paper" : "deterministic"; }

std::string to_string(FlipMode mode) {
  switch (mode) {
    case FlipMode::kNone:
      return "none";
    case FlipMode::kOnce:
      return "once";
    case FlipMode::kDiffusion:
      return "diffusion";
  }
  return "none";
}

SigmaMode parse_sigma_mode(const std::string& name) {
  if (name == "paper") return SigmaMode::kPaper;
  if (name == "deterministic") return SigmaMode::kDeterministic;
  throw InvalidArgument("unknown sigma mode '" + name + "' (expected paper|deterministic)");
}

FlipMode parse_flip_mode(const std::string& name) {
  if (name == "none") return FlipMode::kNone;
  if (name == "once") return FlipMode::kOnce;
  if (name == "diffusion") return FlipMode::kDiffusion;
  throw InvalidArgument("unknown flip mode '" + name + "' (expected none|once|diffusion)");
}

void SamplerConfig::validate() const {
  if (hypotheses < 1) throw InvalidArgument("hypothesis count must be at least 1");
  if (iterations < 1) throw InvalidArgument("iteration count must be at least 1");
  if (t_max < 2) throw InvalidArgument("T_max must be at least 2");
  if (static_cast<std::size_t>(t_max) < iterations) {
    throw InvalidArgument("iteration count " + std::to_string(iterations) + " exceeds T_max " + std::to_string(t_max));
  }
  if (!(signal_scale > 0.0)) throw InvalidArgument("signal scale must be positive");
}

std::vector<int> timestep_ladder(int t_max, std::size_t iterations) {
  if (iterations < 1) throw InvalidArgument("iteration count must be at least 1");
  if (t_max < 1 || static_cast<std::size_t>(t_max) < iterations) {
    throw InvalidArgument("iteration count " + std::to_string(iterations) + " exceeds T_max " + std::to_string(t_max));
  }
  const auto k_total = static_cast<long long>(iterations);
  std::vector<int> ladder;
  ladder.reserve(iterations);
  for (long long k = 0; k < k_total; ++k) {
    const long long numerator = static_cast<long long>(t_max) * (k_total - k);
    long long t = numerator / k_total;
    if (2 * (numerator % k_total) >= k_total) ++t;
    ladder.push_back(static_cast<int>(t));
  }
  return ladder;
}

double ddim_sigma(int t, int t_next, const NoiseSchedule& schedule, SigmaMode mode) {
  schedule.check_timestep(t);
  schedule.check_timestep(t_next);
  if (!(t > t_next)) throw InvalidArgument("DDIM step must move to a smaller timestep");
  if (mode == SigmaMode::kDeterministic) return 0.0;
  const double abar = schedule.alpha_bar(t);
  const double abar_next = schedule.alpha_bar(t_next);
  return std::sqrt((1.0 - abar_next) / (1.0 - abar)) * std::sqrt(1.0 - abar / abar_next);
}

PoseSeq3D ddim_step(const PoseSeq3D& noisy, const PoseSeq3D& y0_hat, int t, int t_next, const NoiseSchedule& schedule,
                    SigmaMode mode, RngStream& rng, DdimDiagnostics* diagnostics) {
  require_same_layout(noisy, y0_hat, "ddim_step");
  const double sigma = ddim_sigma(t, t_next, schedule, mode);
  const double abar = schedule.alpha_bar(t);
  const double abar_next = schedule.alpha_bar(t_next);
  const double signal = std::sqrt(abar);
  const double noise = std::sqrt(1.0 - abar);
  double direction_var = 1.0 - abar_next - sigma * sigma;
  if (direction_var < 0.0) {
    direction_var = 0.0;
    if (diagnostics != nullptr) ++diagnostics->clamped;
  }
  const double direction = std::sqrt(direction_var);
  const double signal_next = std::sqrt(abar_next);

  PoseSeq3D out(noisy.frames(), noisy.joints());
  auto dst = out.values();
  const auto y = noisy.values();
  const auto c = y0_hat.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double eps_t = (y[i] - signal * c[i]) / noise;
    dst[i] = signal_next * c[i] + direction * eps_t;
    if (mode == SigmaMode::kPaper) dst[i] += sigma * rng.normal();
  }
  return out;
}

HypothesisSet ddim_step(const HypothesisSet& noisy, const HypothesisSet& y0_hat, int t, int t_next,
                        const NoiseSchedule& schedule, SigmaMode mode, std::span<RngStream> rngs,
                        DdimDiagnostics* diagnostics) {
  if (noisy.count() != y0_hat.count() || rngs.size() != noisy.count()) {
    throw ShapeError("ddim_step: hypothesis and stream counts differ");
  }
  std::vector<PoseSeq3D> out;
  out.reserve(noisy.count());
  for (std::size_t h = 0; h < noisy.count(); ++h) {
    out.push_back(ddim_step(noisy[h], y0_hat[h], t, t_next, schedule, mode, rngs[h], diagnostics));
  }
  return HypothesisSet(std::move(out));
}

namespace {

constexpr std::uint64_t kSamplerTag = 0x73616d706c6572ull;

// Chain 0 is the primary chain; chain 1 is the mirrored chain of flip-once mode.
RngStream chain_stream(std::uint64_t seed, std::size_t chain, std::size_t hypothesis) {
  return RngStream(seed, derive_stream(derive_stream(kSamplerTag, chain), hypothesis));
}

using Predictor = std::function<PoseSeq3D(const PoseSeq3D& noisy, int t, std::size_t iteration)>;

struct ChainResult {
  PoseSeq3D estimate;
  std::vector<PoseSeq3D> per_iteration;
  std::size_t clamped = 0;
};

ChainResult run_chain(RngStream rng, std::size_t frames, std::size_t joints, const std::vector<int>& ladder,
                      const SamplerConfig& config, const NoiseSchedule& schedule, const Predictor& predict,
                      bool keep_trace) {
  ChainResult result;
  PoseSeq3D noisy(frames, joints);
  rng.fill_normal(noisy.values());
  DdimDiagnostics diag;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    PoseSeq3D estimate = predict(noisy, ladder[k], k);
    if (keep_trace) result.per_iteration.push_back(estimate);
    if (k + 1 < ladder.size()) {
      rng.seek((k + 1) * noisy.size());
      noisy = ddim_step(noisy, estimate, ladder[k], ladder[k + 1], schedule, config.sigma_mode, rng, &diag);
    }
    result.estimate = std::move(estimate);
  }
  result.clamped = diag.clamped;
  return result;
}

void for_each_index(std::size_t count, bool parallel, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = parallel ? std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency())) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PoseSeq3D midpoint(const PoseSeq3D& a, const PoseSeq3D& b) {
  PoseSeq3D out(a.frames(), a.joints());
  auto dst = out.values();
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.5 * (x[i] + y[i]);
  return out;
}

HypothesisSet finish(std::vector<ChainResult>& chains, const SamplerConfig& config, const std::vector<int>& ladder,
                     SampleTrace* trace) {
  const SignalScaling scaling{config.signal_scale};
  std::vector<PoseSeq3D> out;
  out.reserve(chains.size());
  for (auto& c : chains) out.push_back(scaling.decode(c.estimate));
  if (trace != nullptr) {
    trace->timesteps = ladder;
    trace->estimates.clear();
    trace->diagnostics = {};
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      std::vector<PoseSeq3D> step;
      for (auto& c : chains) step.push_back(scaling.decode(c.per_iteration[k]));
      trace->estimates.emplace_back(std::move(step));
    }
    for (const auto& c : chains) trace->diagnostics.clamped += c.clamped;
  }
  return HypothesisSet(std::move(out));
}

void check_schedule(const SamplerConfig& config, const NoiseSchedule& schedule) {
  config.validate();
  if (schedule.t_max() != config.t_max) {
    throw InvalidArgument("sampler T_max " + std::to_string(config.t_max) + " differs from schedule T_max " +
                          std::to_string(schedule.t_max()));
  }
}

}  // namespace

HypothesisSet sample(const PoseSeq2D& keypoints, const Denoiser& denoiser, const SamplerConfig& config,
                     const NoiseSchedule& schedule, SampleTrace* trace) {
  check_schedule(config, schedule);
  const auto ladder = timestep_ladder(config.t_max, config.iterations);
  std::vector<ChainResult> chains(config.hypotheses);
  for_each_index(config.hypotheses, config.parallel, [&](std::size_t h) {
    const Predictor predict = [&](const PoseSeq3D& noisy, int t, std::size_t k) {
      return denoiser.predict(noisy, keypoints, t, DenoiseCall{h, k, false});
    };
    chains[h] = run_chain(chain_stream(config.seed, 0, h), keypoints.frames(), keypoints.joints(), ladder, config,
                          schedule, predict, trace != nullptr);
  });
  return finish(chains, config, ladder, trace);
}

HypothesisSet sample_flipped(const PoseSeq2D& keypoints, const Denoiser& denoiser, const SamplerConfig& config,
                             const NoiseSchedule& schedule, const Skeleton& skeleton, double image_width,
                             SampleTrace* trace) {
  if (config.flip == FlipMode::kNone) return sample(keypoints, denoiser, config, schedule, trace);
  check_schedule(config, schedule);
  if (skeleton.mirror_pairs().empty()) throw InvalidArgument("flip augmentation needs a skeleton with mirror pairs");
  const PoseSeq2D mirrored = flip_pose2d(keypoints, skeleton, image_width);
  const auto ladder = timestep_ladder(config.t_max, config.iterations);
  const bool keep = trace != nullptr;
  std::vector<ChainResult> chains(config.hypotheses);

  for_each_index(config.hypotheses, config.parallel, [&](std::size_t h) {
    const Predictor original = [&](const PoseSeq3D& noisy, int t, std::size_t k) {
      return denoiser.predict(noisy, keypoints, t, DenoiseCall{h, k, false});
    };
    const Predictor flipped = [&](const PoseSeq3D& noisy, int t, std::size_t k) {
      return denoiser.predict(noisy, mirrored, t, DenoiseCall{h, k, true});
    };
    if (config.flip == FlipMode::kDiffusion) {
      const Predictor averaged = [&](const PoseSeq3D& noisy, int t, std::size_t k) {
        const PoseSeq3D direct = original(noisy, t, k);
        const PoseSeq3D back = flip_pose3d(flipped(flip_pose3d(noisy, skeleton), t, k), skeleton);
        return midpoint(direct, back);
      };
      chains[h] = run_chain(chain_stream(config.seed, 0, h), keypoints.frames(), keypoints.joints(), ladder, config,
                            schedule, averaged, keep);
      return;
    }
    ChainResult a = run_chain(chain_stream(config.seed, 0, h), keypoints.frames(), keypoints.joints(), ladder, config,
                              schedule, original, keep);
    ChainResult b = run_chain(chain_stream(config.seed, 1, h), keypoints.frames(), keypoints.joints(), ladder, config,
                              schedule, flipped, keep);
    ChainResult merged;
    merged.estimate = midpoint(a.estimate, flip_pose3d(b.estimate, skeleton));
    for (std::size_t k = 0; k < a.per_iteration.size(); ++k) {
      merged.per_iteration.push_back(midpoint(a.per_iteration[k], flip_pose3d(b.per_iteration[k], skeleton)));
    }
    merged.clamped = a.clamped + b.clamped;
    chains[h] = std::move(merged);
  });
  return finish(chains, config, ladder, trace);
}

void save_hypotheses(const HypothesisSet& hypotheses, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t h = 0; h < hypotheses.count(); ++h) {
    char name[32];
    std::snprintf(name, sizeof(name), "hypothesis_%03zu.jsonl", h);
    save_poses(hypotheses[h], dir / name);
    files.push_back(name);
  }
  const nlohmann::json index{{"count", hypotheses.count()},
                             {"frames", hypotheses.frames()},
                             {"joints", hypotheses.joints()},
                             {"files", files}};
  std::ofstream out(dir / "index.json");
  if (!out) throw InvalidArgument("cannot write hypothesis index in " + dir.string());
  out << index.dump(2) << '\n';
}

HypothesisSet load_hypotheses(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw InvalidArgument("missing hypothesis index in " + dir.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("hypothesis index: ") + e.what());
  }
  std::vector<PoseSeq3D> out;
  for (const auto& name : index.at("files")) out.push_back(load_poses3d(dir / name.get<std::string>()));
  return HypothesisSet(std::move(out));
}

}  // namespace poselift
