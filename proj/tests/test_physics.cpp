#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "homloc/errors.hpp"
#include "homloc/physics.hpp"

using namespace homloc;

namespace {

const double kHalf = 1.0 / std::sqrt(2.0);

// Brute-force trapezoid over the standardized cube [-8, 8]^3; independent of
// the library's quadrature code.
template <typename F>
double integrate_cube(const SourceSpec& s, F&& density, int points = 121) {
  const double lim = 8.0;
  const double h = 2.0 * lim / (points - 1);
  double total = 0.0;
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      for (int k = 0; k < points; ++k) {
        const DetectionEvent e{s.sigma_kx * (-lim + i * h), s.sigma_ky * (-lim + j * h),
                               s.sigma_omega * (-lim + k * h), DetectorTag::SameDetector};
        total += density(e);
      }
    }
  }
  return total * h * h * h * s.sigma_kx * s.sigma_ky * s.sigma_omega;
}

}  // namespace

TEST_CASE("tuning condition") {
  CHECK(tuning_condition({0.5, kHalf, kHalf, kHalf, kHalf, Strategy::Tuned}));
  CHECK_FALSE(tuning_condition({0.5, 1.0, 0.0, 0.0, 1.0, Strategy::Tuned}));
  CHECK(tuning_condition({0.5, 0.6, 0.8, 0.6, 0.8, Strategy::Tuned}));
  // Equivalent to (C_a D_b - C_b D_a)^2 = 0.
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    const double a = ang(gen), b = ang(gen);
    PolarizationSetting p{0.5, std::cos(a), std::sin(a), std::cos(b), std::sin(b), Strategy::Tuned};
    const double cross = p.c_a * p.d_b - p.c_b * p.d_a;
    CHECK(tuning_condition(p) == (cross * cross < kTuningTolerance));
  }
}

TEST_CASE("visibility") {
  CHECK(visibility(PolarizationSetting::tuned(0.3, 0.9)).value == 1.0);
  CHECK(visibility(PolarizationSetting::tuned(0.0, kHalf)).value == 1.0);
  CHECK(visibility(PolarizationSetting::non_tuned(0.5)).value == 0.5);
  CHECK(visibility(PolarizationSetting::non_tuned(0.0)).value == 0.0);
  CHECK_THROWS_AS(visibility({0.5, 1.0, 0.0, 0.0, 1.0, Strategy::Tuned}), UnsupportedRegime);
}

TEST_CASE("gamma coefficient") {
  CHECK(gamma_coefficient(0.5, kHalf) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gamma_coefficient(1.0, 1.0) == doctest::Approx(1.0));
  // nu = 0 reduces to D_a^2 (1 - D_a^2).
  CHECK(gamma_coefficient(0.0, kHalf) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(gamma_coefficient(0.0, kHalf) == doctest::Approx(optimal_tuning(0.0).gamma_max));
  CHECK_THROWS_AS(gamma_coefficient(1.5, 0.5), ValidationError);
  CHECK_THROWS_AS(gamma_coefficient(0.5, -0.1), ValidationError);
}

TEST_CASE("optimal tuning") {
  const auto one = optimal_tuning(1.0);
  CHECK(one.d_a == doctest::Approx(1.0));
  CHECK(one.gamma_max == doctest::Approx(1.0));
  const auto zero = optimal_tuning(0.0);
  CHECK(zero.d_a == doctest::Approx(kHalf));
  CHECK(zero.gamma_max == doctest::Approx(0.25));
  const auto quarter = optimal_tuning(0.25);
  CHECK(quarter.d_a == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(quarter.gamma_max == doctest::Approx(9.0 / 16.0).epsilon(1e-14));

  SUBCASE("nu = 1/4 by dense search") {
    double best = -1.0, arg = 0.0;
    for (int i = 0; i <= 1'000'000; ++i) {
      const double d = i * 1e-6;
      const double g = gamma_coefficient(0.25, d);
      if (g > best) best = g, arg = d;
    }
    CHECK(std::abs(arg - std::sqrt(3.0) / 2.0) < 2e-6);
    CHECK(std::abs(best - 9.0 / 16.0) < 1e-11);
  }

  SUBCASE("gamma never exceeds gamma_max on a 100x100 grid") {
    for (int i = 0; i < 100; ++i) {
      const double nu = i / 99.0;
      const auto opt = optimal_tuning(nu);
      CHECK(std::abs(gamma_coefficient(nu, opt.d_a) - opt.gamma_max) < 1e-12);
      for (int j = 0; j < 100; ++j) {
        const double d = j / 99.0;
        const double g = gamma_coefficient(nu, d);
        CHECK(g <= opt.gamma_max + 1e-12);
        if (std::abs(d - opt.d_a) > 1e-3) CHECK(g < opt.gamma_max - 1e-9);
      }
    }
  }
}

TEST_CASE("kappa coefficient") {
  CHECK(kappa_coefficient(1.0) == 1.0);
  CHECK(kappa_coefficient(0.0) == 0.0);
  CHECK(kappa_coefficient(0.5) == doctest::Approx(1.0 - std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(kappa_coefficient(0.5) == doctest::Approx(0.133975).epsilon(1e-5));
}

TEST_CASE("kappa and gamma lie in [0,1] and grow with nu where expected") {
  double prev_kappa = -1.0, prev_max = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double nu = i / 200.0;
    const double k = kappa_coefficient(nu);
    CHECK(k >= 0.0);
    CHECK(k <= 1.0);
    CHECK(k >= prev_kappa);
    prev_kappa = k;
    const double g = optimal_tuning(nu).gamma_max;
    CHECK(g >= prev_max);
    prev_max = g;
  }
  // At fixed d_a, gamma rises with nu only up to nu = d_a^2, where
  // D_a sqrt(nu) + D_b sqrt(1 - nu) peaks; past it, gamma falls.
  for (int j = 0; j <= 20; ++j) {
    const double d = kHalf + (1.0 - kHalf) * j / 20.0;  // d_a >= d_b
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
      const double nu = i / 200.0;
      const double g = gamma_coefficient(nu, d);
      CHECK(g >= 0.0);
      CHECK(g <= 1.0);
      if (nu <= d * d) CHECK(g >= prev - 1e-15);
      prev = g;
    }
  }
  CHECK(gamma_coefficient(1.0, 0.8) < gamma_coefficient(0.64, 0.8));
}

TEST_CASE("phase") {
  CHECK(phase({1, 0, 0, DetectorTag::SameDetector}, {std::numbers::pi, 0, 0}) == std::numbers::pi);
  CHECK(phase({0.3, -2, 5, DetectorTag::SameDetector}, {0, 0, 0}) == 0.0);
  CHECK(phase({1, 2, 3, DetectorTag::DifferentDetectors}, {1, 1, 1}) == 6.0);
}

TEST_CASE("spectral density") {
  const auto unit = SourceSpec::make(1, 1, 1);
  CHECK(spectral_density({0, 0, 0, DetectorTag::SameDetector}, unit) ==
        doctest::Approx(std::pow(2.0 * std::numbers::pi, -1.5)));

  const auto s = SourceSpec::make(0.7, 1.3, 2.1);
  const DetectionEvent e{0.4, -0.9, 1.7, DetectorTag::SameDetector};
  for (int mask = 0; mask < 8; ++mask) {
    DetectionEvent f = e;
    if (mask & 1) f.dkx = -f.dkx;
    if (mask & 2) f.dky = -f.dky;
    if (mask & 4) f.domega = -f.domega;
    CHECK(spectral_density(f, s) == doctest::Approx(spectral_density(e, s)).epsilon(1e-15));
  }

  // Mass and dk_x second moment by brute-force trapezoid.
  CHECK(integrate_cube(s, [&](const DetectionEvent& x) { return spectral_density(x, s); }, 81) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_cube(s, [&](const DetectionEvent& x) { return x.dkx * x.dkx * spectral_density(x, s); }, 81) ==
        doctest::Approx(0.49).epsilon(1e-10));
}

TEST_CASE("event density examples") {
  const auto unit = SourceSpec::make(1, 1, 1);
  const auto perfect = PolarizationSetting::tuned(1.0, 1.0);
  DetectionEvent e{0.7, -0.2, 1.1, DetectorTag::DifferentDetectors};
  CHECK(event_density(e, {0, 0, 0}, perfect, unit) == 0.0);

  const auto flat = PolarizationSetting::non_tuned(0.0);
  for (auto tag : {DetectorTag::SameDetector, DetectorTag::DifferentDetectors}) {
    e.tag = tag;
    CHECK(event_density(e, {2, 1, 3}, flat, unit) ==
          doctest::Approx(0.5 * spectral_density(e, unit)));
  }
  CHECK_THROWS_AS(event_density(e, {0, 0, 0}, {0.5, 1, 0, 0, 1, Strategy::Tuned}, unit),
                  UnsupportedRegime);
}

TEST_CASE("event density is nonnegative") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const auto s = SourceSpec::make(0.1 + 3 * u(gen), 0.1 + 3 * u(gen), 0.1 + 3 * u(gen));
    const auto p = (i % 2) ? PolarizationSetting::non_tuned(u(gen))
                           : PolarizationSetting::tuned(u(gen), u(gen));
    const DetectionEvent e{n(gen), n(gen), n(gen),
                           (i % 3) ? DetectorTag::SameDetector : DetectorTag::DifferentDetectors};
    CHECK(event_density(e, {n(gen), n(gen), n(gen)}, p, s) >= 0.0);
  }
}

TEST_CASE("event density normalizes over both branches" * doctest::timeout(120)) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<Offset3D, double>> draws{{{2, 2, 0}, 0.5}};
  while (draws.size() < 21) {
    draws.push_back({{4 * u(gen) - 2, 4 * u(gen) - 2, 4 * u(gen) - 2}, u(gen)});
  }
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& [theta, nu] = draws[i];
    const auto s = i == 0 ? SourceSpec::make(1, 1, 1)
                          : SourceSpec::make(0.5 + u(gen), 0.5 + u(gen), 0.5 + u(gen));
    const auto p = PolarizationSetting::non_tuned(nu);
    const double mass = integrate_cube(s, [&](DetectionEvent e) {
      e.tag = DetectorTag::SameDetector;
      const double a = event_density(e, theta, p, s);
      e.tag = DetectorTag::DifferentDetectors;
      return a + event_density(e, theta, p, s);
    });
    CHECK(std::abs(mass - 1.0) < 1e-8);
  }
}

TEST_CASE("bucket coincidence probability") {
  const auto unit = SourceSpec::make(1, 1, 1);
  CHECK(bucket_coincidence_probability({0, 0, 0}, PolarizationSetting::tuned(1.0, 1.0), unit) == 0.0);
  CHECK(bucket_coincidence_probability({0, 0, 0}, PolarizationSetting::non_tuned(0.3), unit) ==
        doctest::Approx(0.35));
  CHECK(bucket_coincidence_probability({40, 40, 40}, PolarizationSetting::non_tuned(0.9), unit) ==
        doctest::Approx(0.5));

  SUBCASE("equals the integrated coincidence branch") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const auto s = SourceSpec::make(0.5 + u(gen), 0.5 + u(gen), 0.5 + u(gen));
      const Offset3D theta{3 * u(gen) - 1.5, 3 * u(gen) - 1.5, 3 * u(gen) - 1.5};
      const auto p = (i % 2) ? PolarizationSetting::tuned(u(gen), 0.5 + 0.5 * u(gen))
                             : PolarizationSetting::non_tuned(u(gen));
      const double mass = integrate_cube(s, [&](DetectionEvent e) {
        e.tag = DetectorTag::DifferentDetectors;
        return event_density(e, theta, p, s);
      }, 101);
      CHECK(std::abs(mass - bucket_coincidence_probability(theta, p, s)) < 1e-6);
    }
  }
}

TEST_CASE("tuned density does not depend on which matched projector is used") {
  const auto s = SourceSpec::make(1.0, 0.5, 2.0);
  const Offset3D theta{0.3, -1.2, 0.8};
  const auto a = PolarizationSetting::tuned(0.4, 0.2);
  const auto b = PolarizationSetting::tuned(0.4, 0.95);
  const PolarizationSetting c{0.4, -0.6, -0.8, 0.6, 0.8, Strategy::Tuned};  // C = -D
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int i = 0; i < 200; ++i) {
    const DetectionEvent e{n(gen), n(gen), n(gen),
                           i % 2 ? DetectorTag::SameDetector : DetectorTag::DifferentDetectors};
    const double ref = event_density(e, theta, a, s);
    CHECK(event_density(e, theta, b, s) == ref);
    CHECK(event_density(e, theta, c, s) == ref);
  }
  CHECK(detection_probability(a) != detection_probability(b));
}

TEST_CASE("branch information weight") {
  CHECK(branch_information_weight(0.0, 1.0) == 1.0);
  CHECK(branch_information_weight(1.3, 1.0) == 1.0);
  CHECK(branch_information_weight(0.0, 0.5) == 0.0);
  // Direct sum over branches of P * (d log P / d phase)^2.
  for (double v : {0.1, 0.5, 0.9, 0.999}) {
    for (double ph : {0.2, 1.0, 2.5, 3.1}) {
      double direct = 0.0;
      for (int t : {1, -1}) {
        const double prob = 0.5 * (1.0 + v * t * std::cos(ph));
        const double dlog = -v * t * std::sin(ph) / (1.0 + v * t * std::cos(ph));
        direct += prob * dlog * dlog;
      }
      CHECK(branch_information_weight(ph, v) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}
