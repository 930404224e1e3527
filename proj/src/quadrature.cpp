#include "homloc/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "homloc/errors.hpp"

namespace homloc::quadrature {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights mu0 times the squared first eigenvector components.
Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  const auto n = diag.size();
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

Rule gauss_hermite(int n) {
  if (n < 1) throw ValidationError("quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) off[i - 1] = std::sqrt(static_cast<double>(i));
  auto rule = golub_welsch(diag, off, 1.0);
  // Symmetrize to remove eigen-solver round-off in the odd moments.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Rule gauss_legendre(int n) {
  if (n < 1) throw ValidationError("quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) {
    const double k = i;
    off[i - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  return golub_welsch(diag, off, 2.0);
}

Rule composite_normal(double lo, double hi, int panels, int order) {
  if (!(hi > lo) || panels < 1) throw ValidationError("invalid composite rule range");
  const Rule base = gauss_legendre(order);
  const double width = (hi - lo) / panels;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Rule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(rule.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double z = mid + 0.5 * width * base.nodes[i];
      rule.nodes.push_back(z);
      rule.weights.push_back(0.5 * width * base.weights[i] * inv_sqrt_2pi *
                             std::exp(-0.5 * z * z));
    }
  }
  return rule;
}

}  // namespace homloc::quadrature
