#include "poselift/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace poselift {

NoiseSchedule NoiseSchedule::cosine(int t_max, double offset, double max_beta) {
  if (t_max < 2) throw InvalidArgument("T_max must be at least 2, got " + std::to_string(t_max));
  const auto f = [&](int t) {
    const double phase = (static_cast<double>(t) / t_max + offset) / (1.0 + offset) * std::numbers::pi / 2.0;
    const double c = std::cos(phase);
    return c * c;
  };

  const auto n = static_cast<std::size_t>(t_max) + 1;
  std::vector<double> beta(n, 0.0), alpha(n, 1.0), alpha_bar(n, 1.0);
  double previous = f(0);
  for (std::size_t t = 1; t < n; ++t) {
    const double current = f(static_cast<int>(t));
    beta[t] = std::min(1.0 - current / previous, max_beta);
    alpha[t] = 1.0 - beta[t];
    alpha_bar[t] = alpha_bar[t - 1] * alpha[t];
    previous = current;
  }
  return NoiseSchedule(std::move(beta), std::move(alpha), std::move(alpha_bar));
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 0 || t > t_max()) {
    throw InvalidArgument("timestep " + std::to_string(t) + " outside [0, " + std::to_string(t_max()) + "]");
  }
}

void NoiseSchedule::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "t,beta,alpha,alpha_bar\n";
  for (std::size_t t = 0; t < beta_.size(); ++t) {
    out << t << ',' << beta_[t] << ',' << alpha_[t] << ',' << alpha_bar_[t] << '\n';
  }
  out.precision(old_precision);
}

NoiseSchedule make_cosine_schedule(int t_max) { return NoiseSchedule::cosine(t_max); }

PoseSeq3D diffuse(const PoseSeq3D& y0, int t, const NoiseSchedule& schedule, const PoseSeq3D& eps) {
  schedule.check_timestep(t);
  require_same_layout(y0, eps, "diffuse");
  const double signal = std::sqrt(schedule.alpha_bar(t));
  const double noise = std::sqrt(1.0 - schedule.alpha_bar(t));
  PoseSeq3D out(y0.frames(), y0.joints());
  auto dst = out.values();
  const auto a = y0.values();
  const auto e = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = signal * a[i] + noise * e[i];
  return out;
}

namespace {

PoseSeq3D multiply(const PoseSeq3D& pose, double factor) {
  PoseSeq3D out = pose;
  for (double& v : out.values()) v *= factor;
  return out;
}

PoseSeq3D divide(const PoseSeq3D& pose, double divisor) {
  PoseSeq3D out = pose;
  for (double& v : out.values()) v /= divisor;
  return out;
}

void check_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("signal scale must be positive, got " + std::to_string(scale));
  }
}

}  // namespace

PoseSeq3D scale_signal(const PoseSeq3D& normalized, double scale) {
  check_scale(scale);
  return multiply(normalized, scale);
}

PoseSeq3D unscale_signal(const PoseSeq3D& scaled, double scale) {
  check_scale(scale);
  return divide(scaled, scale);
}

PoseSeq3D SignalScaling::encode(const PoseSeq3D& millimeters) const {
  return scale_signal(divide(millimeters, kMillimetersPerUnit), scale);
}

PoseSeq3D SignalScaling::decode(const PoseSeq3D& signal) const {
  return multiply(unscale_signal(signal, scale), kMillimetersPerUnit);
}

}  // namespace poselift
