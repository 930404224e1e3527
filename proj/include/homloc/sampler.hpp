#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homloc/model.hpp"

namespace homloc {

struct EventBatch {
  std::vector<DetectionEvent> events;
  /// Emitted-pair index of each retained event (same order as `events`).
  std::vector<std::uint64_t> pair_index;
  std::uint64_t n_emitted = 0;
  std::uint64_t seed = 0;
  std::string scenario_digest;
  std::string generator;

  std::uint64_t n_detected() const { return events.size(); }
};

/// Stable 64-bit FNV-1a digest (16 hex digits) of (theta, p, s).
std::string scenario_digest(const Offset3D& theta, const PolarizationSetting& p,
                            const SourceSpec& s);

/// Draws n_emitted pairs: tuned pairs survive post-selection with
/// probability gamma; retained pairs get Gaussian (dk, domega) and a
/// coincidence tag with probability (1 - V cos(phase)) / 2. Every pair index
/// owns its own random stream.
EventBatch sample_batch(std::uint64_t seed, std::uint64_t n_emitted, const Offset3D& theta,
                        const PolarizationSetting& p, const SourceSpec& s, int threads = 1);

/// n detected events at visibility V with no post-selection step.
std::vector<DetectionEvent> sample_conditional(std::uint64_t seed, std::uint64_t n,
                                               const Offset3D& theta, double visibility,
                                               const SourceSpec& s, int threads = 1);

struct GoodnessOfFit {
  /// (mean square - sigma^2) / standard error, per axis.
  double variance_z[3] = {0.0, 0.0, 0.0};
  double coincidence_fraction = 0.0;
  double expected_coincidence_fraction = 0.0;
  double coincidence_z = 0.0;
  /// Binned test of the tag given cos(phase).
  double chi_square = 0.0;
  int chi_square_dof = 0;
  /// Smallest per-test p-value and the Bonferroni threshold it is held to.
  double min_p_value = 1.0;
  double per_test_threshold = 0.0;
  bool passed = false;
};

/// Compares a batch with the analytic law: per-axis second moments, total
/// coincidence mass, and the conditional tag law across 20 cos(phase) bins.
/// The five tests share `significance` via Bonferroni. Throws on empty batch.
GoodnessOfFit empirical_check(const EventBatch& batch, const Offset3D& theta,
                              const PolarizationSetting& p, const SourceSpec& s,
                              double significance = 0.01);

}  // namespace homloc
