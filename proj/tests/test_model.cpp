#include <doctest.h>

#include <cmath>
#include <random>

#include "homloc/errors.hpp"
#include "homloc/model.hpp"

using namespace homloc;

TEST_CASE("widths_to_bandwidths inverts each width") {
  const auto s = widths_to_bandwidths({50.0, 100.0, 0.3});
  CHECK(s.sigma_kx == doctest::Approx(0.02));
  CHECK(s.sigma_ky == doctest::Approx(0.01));
  CHECK(s.sigma_omega == doctest::Approx(10.0 / 3.0));

  const auto unit = widths_to_bandwidths({1.0, 1.0, 1.0});
  CHECK(unit.sigma_kx == 1.0);
  CHECK(unit.sigma_ky == 1.0);
  CHECK(unit.sigma_omega == 1.0);

  CHECK_THROWS_AS(widths_to_bandwidths({0.0, 1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(widths_to_bandwidths({1.0, -2.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(SourceSpec::make(1.0, 1.0, std::nan("")), ValidationError);
  CHECK_THROWS_AS(SourceSpec::make(INFINITY, 1.0, 1.0), ValidationError);
}

TEST_CASE("bandwidth round trip holds to 1e-12 relative") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
  for (int i = 0; i < 200; ++i) {
    const auto s = SourceSpec::make(std::exp(log_scale(gen)), std::exp(log_scale(gen)),
                                    std::exp(log_scale(gen)));
    const auto back = widths_to_bandwidths(bandwidths_to_widths(s));
    CHECK(std::abs(back.sigma_kx / s.sigma_kx - 1.0) < 1e-12);
    CHECK(std::abs(back.sigma_ky / s.sigma_ky - 1.0) < 1e-12);
    CHECK(std::abs(back.sigma_omega / s.sigma_omega - 1.0) < 1e-12);
  }
}

TEST_CASE("pixel_to_momentum") {
  CHECK(pixel_to_momentum({1.0, 1.0}, 3.0, 1.0) == 2.0);
  CHECK(pixel_to_momentum({1.0, 1.0}, 1.7, 1.7) == 0.0);
  CHECK(pixel_to_momentum({2.0, 4.0}, 1.0, 0.0) == 0.5);
  CHECK_THROWS_AS(pixel_to_momentum({0.0, 1.0}, 1.0, 0.0), ValidationError);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 500; ++i) {
    const DetectorGeometry g{std::abs(u(gen)) + 0.1, std::abs(u(gen)) + 0.1};
    const double x = u(gen), xp = u(gen);
    CHECK(pixel_to_momentum(g, x, xp) == -pixel_to_momentum(g, xp, x));
  }
}

TEST_CASE("validate_polarization") {
  const double h = 1.0 / std::sqrt(2.0);
  const auto p = validate_polarization({0.5, h, h, h, h, Strategy::Tuned});
  CHECK(p.strategy == Strategy::Tuned);

  CHECK_THROWS_AS(validate_polarization({1.2, h, h, h, h, Strategy::Tuned}), ValidationError);
  CHECK_THROWS_AS(validate_polarization({-0.1, 1, 0, 1, 0, Strategy::NonTuned}), ValidationError);
  CHECK_NOTHROW(validate_polarization({1.0, 1.0, 0.0, 1.0, 0.0, Strategy::Tuned}));
  CHECK_THROWS_AS(validate_polarization({0.5, 0.6, 0.6, 1.0, 0.0, Strategy::Tuned}),
                  ValidationError);

  SUBCASE("accepted set is exactly nu in [0,1] with unit projectors") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    for (int i = 0; i < 1000; ++i) {
      const double nu = u(gen);
      const double a = ang(gen), b = ang(gen);
      // Some draws are perturbed off the unit circle.
      const double stretch = (i % 3 == 0) ? 1.0 + 1e-6 : 1.0;
      PolarizationSetting s{nu, std::cos(a) * stretch, std::sin(a), std::cos(b), std::sin(b),
                            Strategy::NonTuned};
      const bool ok = nu >= 0.0 && nu <= 1.0 &&
                      std::abs(s.c_a * s.c_a + s.c_b * s.c_b - 1.0) <= 1e-12;
      if (ok) {
        CHECK_NOTHROW(validate_polarization(s));
      } else {
        CHECK_THROWS_AS(validate_polarization(s), ValidationError);
      }
    }
  }
}

TEST_CASE("detector tags are exactly +1 or -1") {
  CHECK(detector_tag_from_int(1) == DetectorTag::SameDetector);
  CHECK(detector_tag_from_int(-1) == DetectorTag::DifferentDetectors);
  CHECK_THROWS_AS(detector_tag_from_int(0), ValidationError);
  CHECK_THROWS_AS(detector_tag_from_int(2), ValidationError);
}

TEST_CASE("offsets accept any sign but must be finite") {
  CHECK_NOTHROW(Offset3D::make(-3.0, 0.0, 1e9));
  CHECK_THROWS_AS(Offset3D::make(0.0, std::nan(""), 0.0), ValidationError);
}
