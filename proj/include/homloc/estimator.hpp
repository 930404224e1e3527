#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "homloc/fisher.hpp"
#include "homloc/model.hpp"

namespace homloc {

/// Log terms below this are clamped so V = 1 likelihoods stay finite.
inline constexpr double kLogFloor = 1e-300;

struct LogLikelihood {
  double value = 0.0;
  /// Number of terms that hit the floor.
  std::size_t n_floored = 0;
};

/// sum_i log(1 + V tag_i cos(phase_i)). The Gaussian envelope and the 1/2
/// branch normalization do not depend on theta and are dropped.
LogLikelihood log_likelihood(std::span<const DetectionEvent> events, const Offset3D& theta,
                             double visibility);
LogLikelihood log_likelihood(std::span<const DetectionEvent> events, const Offset3D& theta,
                             const PolarizationSetting& p, const SourceSpec& s);

Eigen::Vector3d log_likelihood_gradient(std::span<const DetectionEvent> events,
                                        const Offset3D& theta, double visibility);

/// Log-likelihood on the tensor grid xs x ys x ts; entry (ix * ny + iy) * nt + it.
std::vector<double> log_likelihood_grid(std::span<const DetectionEvent> events, double visibility,
                                        std::span<const double> xs, std::span<const double> ys,
                                        std::span<const double> ts);

struct SearchConfig {
  std::array<std::pair<double, double>, 3> box{{{-5.0, 5.0}, {-5.0, 5.0}, {-5.0, 5.0}}};
  /// Coarse grid points per axis; raised automatically to satisfy the
  /// basin-spacing rule (spacing <= pi / (3 * q99 |dk|)).
  int grid_points = 41;
  int max_grid_points = 257;
  /// Nested local grids around the best coarse candidates before the
  /// gradient stage. The V = 1 likelihood has -inf walls on the planes where
  /// an event's branch density vanishes; local grids cross them, ascent
  /// cannot.
  int refine_levels = 3;
  int refine_points = 11;
  int refine_candidates = 4;
  int max_iterations = 100;
  /// On max_i |dL/dtheta_i| / (n sigma_i).
  double gradient_tolerance = 1e-8;
  /// Central-difference step for the Hessian, divided by sigma_i per axis.
  double hessian_step = 1e-4;
  std::size_t min_events = 50;
  /// cos is even, so theta and -theta give identical likelihoods; the
  /// estimate is reported in the half-space orientation . theta >= 0.
  Eigen::Vector3d orientation{1.0, 1.0, 1.0};
  bool keep_trace = false;
};

struct TraceEntry {
  Offset3D theta;
  double log_likelihood;
  double scaled_gradient;
};

struct MleResult {
  Offset3D theta_hat;
  double log_likelihood = 0.0;
  Eigen::Matrix3d observed_information = Eigen::Matrix3d::Zero();
  /// sqrt(diag(observed_information^-1)); infinite when singular.
  Eigen::Vector3d standard_error = Eigen::Vector3d::Zero();
  bool converged = false;
  bool at_boundary = false;
  std::size_t n_events_used = 0;
  std::size_t n_floored = 0;
  int iterations = 0;
  double scaled_gradient = 0.0;
  std::array<int, 3> grid_points{0, 0, 0};
  std::vector<TraceEntry> trace;
};

/// Coarse grid over the box, nested local grids around the best candidates,
/// then Newton ascent (analytic gradient, central-difference Hessian) until
/// the scaled gradient falls below tolerance.
MleResult mle_fit(std::span<const DetectionEvent> events, const PolarizationSetting& p,
                  const SourceSpec& s, const SearchConfig& search = {});

struct ReplicationRecord {
  std::uint64_t seed = 0;
  std::uint64_t n_detected = 0;
  MleResult fit;
};

struct ReplicationSummary {
  std::vector<ReplicationRecord> runs;
  std::uint64_t n_per_replication = 0;
  std::size_t replications = 0;
  std::size_t n_excluded = 0;
  Offset3D truth;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  Eigen::Vector3d empirical_std = Eigen::Vector3d::Zero();
  /// Reference bound from the exact Fisher information at the truth.
  CrbReport crb;
  Eigen::Vector3d std_over_crb = Eigen::Vector3d::Zero();
};

/// R seeded batches of n_per_replication emitted pairs, each fitted by
/// mle_fit. Non-converged fits are kept in `runs` but left out of the
/// statistics and counted in n_excluded.
ReplicationSummary replicate(std::uint64_t master_seed, std::size_t replications,
                             std::uint64_t n_per_replication, const Offset3D& theta,
                             const PolarizationSetting& p, const SourceSpec& s,
                             const SearchConfig& search = {}, int threads = 1);

}  // namespace homloc
