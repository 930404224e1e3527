#pragma once

// Domain value types shared by every module. All computation is unit-agnostic:
// callers pick consistent length/time units and bandwidths are their inverses.

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace homloc {

/// Gaussian bandwidths of the two-photon spectral amplitude.
struct SourceSpec {
  double sigma_kx;
  double sigma_ky;
  double sigma_omega;

  /// Throws ValidationError unless every bandwidth is positive and finite.
  static SourceSpec make(double sigma_kx, double sigma_ky, double sigma_omega);

  Eigen::Vector3d bandwidths() const { return {sigma_kx, sigma_ky, sigma_omega}; }
};

/// Spatial/temporal wavepacket widths; the reciprocal picture of SourceSpec.
struct SpatialWidths {
  double sigma_x;
  double sigma_y;
  double sigma_t;

  static SpatialWidths make(double sigma_x, double sigma_y, double sigma_t);
};

SourceSpec widths_to_bandwidths(const SpatialWidths& w);
SpatialWidths bandwidths_to_widths(const SourceSpec& s);

enum class Strategy { Tuned, NonTuned };

const char* to_string(Strategy s);

struct PolarizationSetting {
  double nu = 1.0;
  double c_a = 1.0;
  double c_b = 0.0;
  double d_a = 1.0;
  double d_b = 0.0;
  Strategy strategy = Strategy::Tuned;

  /// Tuned setting with matched projectors C = D = (d_a, sqrt(1 - d_a^2)).
  static PolarizationSetting tuned(double nu, double d_a);
  /// Tuned setting at the d_a that maximizes the post-selection scale.
  static PolarizationSetting tuned_optimal(double nu);
  static PolarizationSetting non_tuned(double nu);
};

/// Normalization tolerance for projector amplitudes.
inline constexpr double kAmplitudeTolerance = 1e-12;

/// Enforces nu in [0,1] and unit-norm projectors. The tuning condition itself
/// is checked where a Tuned setting is used (see physics).
PolarizationSetting validate_polarization(const PolarizationSetting& p);

/// The estimand: transverse offsets and time-of-flight delay.
struct Offset3D {
  double dx = 0.0;
  double dy = 0.0;
  double dt = 0.0;

  static Offset3D make(double dx, double dy, double dt);
  static Offset3D from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

  Eigen::Vector3d vector() const { return {dx, dy, dt}; }
};

struct DetectorGeometry {
  double k0;
  double distance;

  static DetectorGeometry make(double k0, double distance);
};

/// (k0/d) * (x - x'): momentum difference for two detector-plane coordinates.
double pixel_to_momentum(const DetectorGeometry& g, double x, double x_prime);

/// Which output configuration registered the pair.
enum class DetectorTag : std::int8_t {
  SameDetector = 1,         // bunching
  DifferentDetectors = -1,  // coincidence
};

inline int sign(DetectorTag t) { return static_cast<int>(t); }

/// Throws ValidationError unless v is exactly +1 or -1.
DetectorTag detector_tag_from_int(long long v);

struct DetectionEvent {
  double dkx = 0.0;
  double dky = 0.0;
  double domega = 0.0;
  DetectorTag tag = DetectorTag::SameDetector;

  Eigen::Vector3d momentum() const { return {dkx, dky, domega}; }
};

}  // namespace homloc
