#include <doctest.h>

#include <cmath>
#include <numeric>

#include "homloc/errors.hpp"
#include "homloc/quadrature.hpp"

using namespace homloc::quadrature;

namespace {

double moment(const Rule& r, int p) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
  return s;
}

double double_factorial(int n) {
  double v = 1.0;
  for (int k = n; k > 1; k -= 2) v *= k;
  return v;
}

}  // namespace

TEST_CASE("Gauss-Hermite reproduces standard normal moments") {
  for (int n : {1, 2, 5, 10, 40, 80}) {
    const auto r = gauss_hermite(n);
    REQUIRE(r.size() == static_cast<std::size_t>(n));
    for (int p = 0; p <= std::min(2 * n - 1, 16); ++p) {
      const double expected = (p % 2) ? 0.0 : double_factorial(p - 1);
      CHECK(std::abs(moment(r, p) - expected) <= 1e-11 * double_factorial(p + 1));
    }
  }
}

TEST_CASE("Gauss-Hermite of order 40 integrates a Gaussian-weighted cosine") {
  const auto r = gauss_hermite(40);
  for (double w : {0.5, 1.0, 2.0}) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::cos(w * r.nodes[i]);
    CHECK(s == doctest::Approx(std::exp(-0.5 * w * w)).epsilon(1e-12));
  }
}

TEST_CASE("Gauss-Legendre integrates polynomials on [-1,1]") {
  const auto r = gauss_legendre(10);
  CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(2.0));
  for (int p = 0; p < 20; ++p) {
    const double expected = (p % 2) ? 0.0 : 2.0 / (p + 1);
    CHECK(moment(r, p) == doctest::Approx(expected).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("composite normal rule handles oscillation the Hermite rule cannot") {
  const double w = 14.0;
  const auto r = composite_normal(-10.0, 10.0, 400, 10);
  double s = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    s += r.weights[i] * std::cos(w * r.nodes[i]);
    mass += r.weights[i];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(s - std::exp(-0.5 * w * w)) < 1e-13);
}

TEST_CASE("invalid rules are rejected") {
  CHECK_THROWS_AS(gauss_hermite(0), homloc::ValidationError);
  CHECK_THROWS_AS(composite_normal(1.0, -1.0, 4, 5), homloc::ValidationError);
}
