#pragma once

#include <iosfwd>
#include <vector>

#include "poselift/pose.hpp"

namespace poselift {

/// Per-timestep variance tables for t in [0, T_max]. t = 0 is the clean
/// signal (beta_0 = 0, alpha_bar_0 = 1).
class NoiseSchedule {
 public:
  /// Cosine schedule: alpha_bar(t) = f(t) / f(0), f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2),
  /// with betas clipped to max_beta.
  static NoiseSchedule cosine(int t_max, double offset = 0.008, double max_beta = 0.999);

  int t_max() const { return static_cast<int>(beta_.size()) - 1; }

  double beta(int t) const { return beta_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t)); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alphas() const { return alpha_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  /// Throws InvalidArgument unless 0 <= t <= T_max.
  void check_timestep(int t) const;

  /// CSV dump with columns t,beta,alpha,alpha_bar.
  void write_csv(std::ostream& out) const;

 private:
  NoiseSchedule(std::vector<double> beta, std::vector<double> alpha, std::vector<double> alpha_bar)
      : beta_(std::move(beta)), alpha_(std::move(alpha)), alpha_bar_(std::move(alpha_bar)) {}

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

NoiseSchedule make_cosine_schedule(int t_max);

/// Closed-form forward diffusion: sqrt(alpha_bar_t) * y0 + sqrt(1 - alpha_bar_t) * eps.
PoseSeq3D diffuse(const PoseSeq3D& y0, int t, const NoiseSchedule& schedule, const PoseSeq3D& eps);

// Diffusion runs on normalized coordinates: millimeters / 1000, then times
// the signal scale.
inline constexpr double kMillimetersPerUnit = 1000.0;
inline constexpr double kDefaultSignalScale = 2.0;

PoseSeq3D scale_signal(const PoseSeq3D& normalized, double scale);
PoseSeq3D unscale_signal(const PoseSeq3D& scaled, double scale);

/// Converts between camera-space millimeters and the scaled diffusion signal.
struct SignalScaling {
  double scale = kDefaultSignalScale;

  PoseSeq3D encode(const PoseSeq3D& millimeters) const;
  PoseSeq3D decode(const PoseSeq3D& signal) const;
  double to_signal(double millimeters) const { return millimeters / kMillimetersPerUnit * scale; }
};

}  // namespace poselift
