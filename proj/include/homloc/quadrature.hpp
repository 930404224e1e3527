#pragma once

#include <vector>

namespace homloc::quadrature {

/// Nodes and weights of a one-dimensional rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Hermite rule for the standard normal weight exp(-z^2/2)/sqrt(2 pi);
/// weights sum to 1. Exact for polynomials of degree <= 2n - 1.
Rule gauss_hermite(int n);

/// Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

/// Composite Gauss-Legendre rule on [lo, hi] with `panels` equal panels, with
/// the standard normal density folded into the weights.
Rule composite_normal(double lo, double hi, int panels, int order);

}  // namespace homloc::quadrature
