#include "homloc/physics.hpp"

#include <cmath>
#include <numbers>

#include "homloc/errors.hpp"

namespace homloc {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
  }
}

}  // namespace

bool tuning_condition(const PolarizationSetting& p) {
  const double lhs = 2.0 * p.c_a * p.d_a * p.c_b * p.d_b;
  const double rhs = p.c_a * p.c_a * p.d_b * p.d_b + p.c_b * p.c_b * p.d_a * p.d_a;
  return std::abs(lhs - rhs) < kTuningTolerance;
}

Visibility visibility(const PolarizationSetting& p) {
  if (p.strategy == Strategy::NonTuned) return {p.nu};
  if (!tuning_condition(p)) {
    throw UnsupportedRegime(
        "tuned strategy requires matched projectors (C_a D_b - C_b D_a = 0); "
        "general projector pairs are not supported");
  }
  return {1.0};
}

double gamma_coefficient(double nu, double d_a) {
  require_unit_interval(nu, "nu");
  require_unit_interval(d_a, "d_a");
  const double d_b = std::sqrt(1.0 - d_a * d_a);
  const double amp = d_a * std::sqrt(nu) + d_b * std::sqrt(1.0 - nu);
  return d_a * d_a * amp * amp;
}

OptimalTuning optimal_tuning(double nu) {
  require_unit_interval(nu, "nu");
  const double r = std::sqrt(nu);
  return {std::sqrt((1.0 + r) / 2.0), (1.0 + r) * (1.0 + r) / 4.0};
}

double kappa_coefficient(double nu) {
  require_unit_interval(nu, "nu");
  return 1.0 - std::sqrt(1.0 - nu * nu);
}

double detection_probability(const PolarizationSetting& p) {
  if (p.strategy == Strategy::NonTuned) return 1.0;
  visibility(p);  // regime check
  const double amp = p.d_a * std::sqrt(p.nu) + p.d_b * std::sqrt(1.0 - p.nu);
  return p.d_a * p.d_a * amp * amp;
}

double phase(const DetectionEvent& e, const Offset3D& theta) {
  return e.dkx * theta.dx + e.dky * theta.dy + e.domega * theta.dt;
}

double spectral_density(const DetectionEvent& e, const SourceSpec& s) {
  const double zx = e.dkx / s.sigma_kx;
  const double zy = e.dky / s.sigma_ky;
  const double zw = e.domega / s.sigma_omega;
  const double norm = std::pow(2.0 * std::numbers::pi, -1.5) /
                      (s.sigma_kx * s.sigma_ky * s.sigma_omega);
  return norm * std::exp(-0.5 * (zx * zx + zy * zy + zw * zw));
}

double branch_factor(double phase, double visibility, DetectorTag tag) {
  // 1 + V t cos = (1 - V) + V (1 + t cos); 1 +/- cos via half-angle squares.
  const double h = (tag == DetectorTag::SameDetector) ? std::cos(0.5 * phase)
                                                      : std::sin(0.5 * phase);
  return (1.0 - visibility) + 2.0 * visibility * h * h;
}

double branch_probability(double phase, double visibility, DetectorTag tag) {
  return 0.5 * branch_factor(phase, visibility, tag);
}

double event_density(const DetectionEvent& e, const Offset3D& theta,
                     const PolarizationSetting& p, const SourceSpec& s) {
  const double v = visibility(p).value;
  return branch_probability(phase(e, theta), v, e.tag) * spectral_density(e, s);
}

Eigen::Vector3d event_score(const DetectionEvent& e, const Offset3D& theta, double visibility) {
  const double ph = phase(e, theta);
  const double t = sign(e.tag);
  const double d_log = -visibility * t * std::sin(ph) / branch_factor(ph, visibility, e.tag);
  return d_log * e.momentum();
}

double branch_information_weight(double phase, double visibility) {
  if (visibility == 1.0) return 1.0;
  const double s = std::sin(phase);
  const double v2s2 = visibility * visibility * s * s;
  return 0.5 * v2s2 / branch_factor(phase, visibility, DetectorTag::SameDetector) +
         0.5 * v2s2 / branch_factor(phase, visibility, DetectorTag::DifferentDetectors);
}

double bucket_coincidence_probability(const Offset3D& theta, const PolarizationSetting& p,
                                      const SourceSpec& s) {
  const double v = visibility(p).value;
  const double ax = s.sigma_kx * theta.dx;
  const double ay = s.sigma_ky * theta.dy;
  const double at = s.sigma_omega * theta.dt;
  const double big_s = ax * ax + ay * ay + at * at;
  return 0.5 * (1.0 - v * std::exp(-0.5 * big_s));
}

}  // namespace homloc
