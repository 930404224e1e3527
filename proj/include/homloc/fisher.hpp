#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "homloc/model.hpp"

namespace homloc {

enum class FisherMethod { ClosedForm, Quadrature, MonteCarlo };

const char* to_string(FisherMethod m);

/// Per-emitted-pair Fisher information for (dx, dy, dt).
struct FisherMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  FisherMethod method = FisherMethod::ClosedForm;
  /// Set when the entries are the large-offset limit of a parameter-dependent
  /// quantity (non-tuned closed form) rather than an exact value.
  bool far_regime_approximation = false;
  /// Relative error estimate (quadrature) or zero.
  double error_estimate = 0.0;
  /// Per-entry standard errors (Monte Carlo only).
  std::optional<Eigen::Matrix3d> standard_error;
};

/// gamma * diag(sigma^2) for tuned settings; kappa * diag(sigma^2), flagged
/// as a far-regime approximation, for non-tuned.
FisherMatrix fim_closed_form(const PolarizationSetting& p, const SourceSpec& s);

struct QuadratureOptions {
  /// Gauss-Hermite order on the two axes transverse to the phase direction.
  int transverse_order = 40;
  /// Gauss-Legendre order per panel along the phase direction.
  int panel_order = 10;
  /// Half-width, in standard deviations, of the phase-direction range.
  double half_range = 10.0;
  int max_panels = 1 << 16;
  double relative_tolerance = 1e-7;
};

/// Fisher information at theta by numerical integration over both detector
/// branches. The tensor rule is laid out in standardized coordinates rotated
/// so that the first axis is the phase direction: composite Gauss-Legendre
/// along it, Gauss-Hermite across it. Panels are doubled until successive
/// estimates agree to the tolerance; throws ConvergenceError otherwise.
FisherMatrix fi_quadrature(const PolarizationSetting& p, const SourceSpec& s,
                           const Offset3D& theta, const QuadratureOptions& opts = {});

/// Cramer-Rao standard-deviation bounds for n_pairs emitted pairs.
struct CrbReport {
  Eigen::Vector3d std_bound = Eigen::Vector3d::Zero();
  std::uint64_t n_pairs = 0;
  /// True when off-diagonal information forced the full inverse.
  bool full_inverse = false;

  double std_dx() const { return std_bound[0]; }
  double std_dy() const { return std_bound[1]; }
  double std_dt() const { return std_bound[2]; }
};

/// 1/sqrt(N F_ii) for diagonal information; sqrt((F^-1)_ii / N) otherwise.
/// Components with zero information report +infinity.
CrbReport crb(const FisherMatrix& f, std::uint64_t n_pairs);

enum class Axis { X = 0, Y = 1, T = 2 };

/// Binomial information of a non-resolving (bucket) measurement about one
/// offset component, per emitted pair. Throws DegenerateInformation when the
/// coincidence probability is exactly 0 or 1.
double bucket_fisher(const PolarizationSetting& p, const SourceSpec& s, const Offset3D& theta,
                     Axis axis);

enum class ScoreAveraging {
  /// Empirical for V < 1, Conditional for V == 1.
  Auto,
  /// Mean of score * score^T over sampled (dk, domega, tag).
  Empirical,
  /// Mean over sampled (dk, domega) of the exact expectation over the tag.
  /// Required at V == 1, where the empirical estimator has infinite variance.
  Conditional,
};

struct MonteCarloOptions {
  ScoreAveraging averaging = ScoreAveraging::Auto;
  int threads = 1;
};

/// Monte Carlo Fisher information from `n_samples` detected events drawn by
/// the sampler. Independent estimates must use distinct seeds.
FisherMatrix fi_monte_carlo(const PolarizationSetting& p, const SourceSpec& s,
                            const Offset3D& theta, std::uint64_t n_samples, std::uint64_t seed,
                            const MonteCarloOptions& opts = {});

}  // namespace homloc
