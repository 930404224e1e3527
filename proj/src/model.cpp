#include "homloc/model.hpp"

#include <cmath>
#include <string>

#include "homloc/errors.hpp"

namespace homloc {

namespace {

void require_positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ValidationError(std::string(name) + " must be positive and finite, got " +
                          std::to_string(v));
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite");
}

}  // namespace

SourceSpec SourceSpec::make(double sigma_kx, double sigma_ky, double sigma_omega) {
  require_positive(sigma_kx, "sigma_kx");
  require_positive(sigma_ky, "sigma_ky");
  require_positive(sigma_omega, "sigma_omega");
  return {sigma_kx, sigma_ky, sigma_omega};
}

SpatialWidths SpatialWidths::make(double sigma_x, double sigma_y, double sigma_t) {
  require_positive(sigma_x, "sigma_x");
  require_positive(sigma_y, "sigma_y");
  require_positive(sigma_t, "sigma_t");
  return {sigma_x, sigma_y, sigma_t};
}

SourceSpec widths_to_bandwidths(const SpatialWidths& w) {
  const auto v = SpatialWidths::make(w.sigma_x, w.sigma_y, w.sigma_t);
  return SourceSpec::make(1.0 / v.sigma_x, 1.0 / v.sigma_y, 1.0 / v.sigma_t);
}

SpatialWidths bandwidths_to_widths(const SourceSpec& s) {
  const auto v = SourceSpec::make(s.sigma_kx, s.sigma_ky, s.sigma_omega);
  return SpatialWidths::make(1.0 / v.sigma_kx, 1.0 / v.sigma_ky, 1.0 / v.sigma_omega);
}

const char* to_string(Strategy s) {
  return s == Strategy::Tuned ? "tuned" : "non_tuned";
}

PolarizationSetting PolarizationSetting::tuned(double nu, double d_a) {
  if (!(d_a >= 0.0 && d_a <= 1.0)) throw ValidationError("d_a must lie in [0,1]");
  const double d_b = std::sqrt(1.0 - d_a * d_a);
  return validate_polarization({nu, d_a, d_b, d_a, d_b, Strategy::Tuned});
}

PolarizationSetting PolarizationSetting::tuned_optimal(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw ValidationError("nu must lie in [0,1]");
  return tuned(nu, std::sqrt((1.0 + std::sqrt(nu)) / 2.0));
}

PolarizationSetting PolarizationSetting::non_tuned(double nu) {
  return validate_polarization({nu, 1.0, 0.0, 1.0, 0.0, Strategy::NonTuned});
}

PolarizationSetting validate_polarization(const PolarizationSetting& p) {
  if (!(p.nu >= 0.0 && p.nu <= 1.0)) {
    throw ValidationError("nu must lie in [0,1], got " + std::to_string(p.nu));
  }
  for (double v : {p.c_a, p.c_b, p.d_a, p.d_b}) require_finite(v, "projector amplitude");
  if (std::abs(p.c_a * p.c_a + p.c_b * p.c_b - 1.0) > kAmplitudeTolerance) {
    throw ValidationError("projector C is not normalized: c_a^2 + c_b^2 != 1");
  }
  if (std::abs(p.d_a * p.d_a + p.d_b * p.d_b - 1.0) > kAmplitudeTolerance) {
    throw ValidationError("projector D is not normalized: d_a^2 + d_b^2 != 1");
  }
  return p;
}

Offset3D Offset3D::make(double dx, double dy, double dt) {
  require_finite(dx, "dx");
  require_finite(dy, "dy");
  require_finite(dt, "dt");
  return {dx, dy, dt};
}

DetectorGeometry DetectorGeometry::make(double k0, double distance) {
  require_positive(k0, "k0");
  require_positive(distance, "distance");
  return {k0, distance};
}

double pixel_to_momentum(const DetectorGeometry& g, double x, double x_prime) {
  const auto checked = DetectorGeometry::make(g.k0, g.distance);
  const double scale = checked.k0 / checked.distance;
  return scale * x - scale * x_prime;
}

DetectorTag detector_tag_from_int(long long v) {
  if (v == 1) return DetectorTag::SameDetector;
  if (v == -1) return DetectorTag::DifferentDetectors;
  throw ValidationError("detector tag must be +1 or -1, got " + std::to_string(v));
}

}  // namespace homloc
