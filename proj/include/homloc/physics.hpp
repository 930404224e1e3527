#pragma once

// Two-photon detection distributions for the polarization-tuned and non-tuned
// strategies.
//
// Joint density of one detected pair over (dk, domega, tag):
//
//   f(e | theta) = 1/2 * |phi(e)|^2 * (1 + V * tag * cos(dk . theta))
//
// where |phi|^2 is a zero-mean Gaussian density with per-axis variances
// (sigma_kx^2, sigma_ky^2, sigma_omega^2), V the fringe visibility, and
// tag = -1 for coincidences (different detectors), +1 for bunching. For the
// tuned strategy this is the law conditional on passing polarization
// post-selection; the pass probability is gamma_coefficient().

#include <utility>

#include <Eigen/Core>

#include "homloc/model.hpp"

namespace homloc {

inline constexpr double kTuningTolerance = 1e-10;

/// 2 C_a D_a C_b D_b == C_a^2 D_b^2 + C_b^2 D_a^2, i.e. (C_a D_b - C_b D_a)^2 == 0.
bool tuning_condition(const PolarizationSetting& p);

/// Fringe visibility, in [0,1].
struct Visibility {
  double value;
};

/// 1 for a tuned setting satisfying the condition, nu for non-tuned.
/// Throws UnsupportedRegime for a tuned setting violating the condition.
Visibility visibility(const PolarizationSetting& p);

/// D_a^2 (D_a sqrt(nu) + D_b sqrt(1 - nu))^2 with D_b = sqrt(1 - D_a^2).
double gamma_coefficient(double nu, double d_a);

struct OptimalTuning {
  double d_a;
  double gamma_max;
};

OptimalTuning optimal_tuning(double nu);

/// 1 - sqrt(1 - nu^2): far-regime information scale of the non-tuned strategy.
double kappa_coefficient(double nu);

/// Probability that an emitted pair survives post-selection (1 for non-tuned).
double detection_probability(const PolarizationSetting& p);

double phase(const DetectionEvent& e, const Offset3D& theta);

/// Normalized |phi|^2 at the event's (dk, domega).
double spectral_density(const DetectionEvent& e, const SourceSpec& s);

/// (1 + V * tag * cos(phase)) evaluated without cancellation near V -> 1.
double branch_factor(double phase, double visibility, DetectorTag tag);

/// Conditional probability of `tag` given the phase: branch_factor / 2.
double branch_probability(double phase, double visibility, DetectorTag tag);

double event_density(const DetectionEvent& e, const Offset3D& theta,
                     const PolarizationSetting& p, const SourceSpec& s);

/// d/dtheta log f(e | theta). Infinite components where the density vanishes.
Eigen::Vector3d event_score(const DetectionEvent& e, const Offset3D& theta, double visibility);

/// sum over tags of P(tag | phase) * (d log P / d phase)^2, i.e. the
/// per-phase weight multiplying dk dk^T in the Fisher integrand. Equals 1
/// identically when V == 1.
double branch_information_weight(double phase, double visibility);

/// Total mass of the coincidence branch: (1 - V exp(-S/2)) / 2 with
/// S = sigma_kx^2 dx^2 + sigma_ky^2 dy^2 + sigma_omega^2 dt^2.
double bucket_coincidence_probability(const Offset3D& theta, const PolarizationSetting& p,
                                      const SourceSpec& s);

}  // namespace homloc
