#include "homloc/fisher.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "homloc/errors.hpp"
#include "homloc/parallel.hpp"
#include "homloc/physics.hpp"
#include "homloc/quadrature.hpp"
#include "homloc/sampler.hpp"

namespace homloc {

const char* to_string(FisherMethod m) {
  switch (m) {
    case FisherMethod::ClosedForm: return "closed_form";
    case FisherMethod::Quadrature: return "quadrature";
    case FisherMethod::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

FisherMatrix fim_closed_form(const PolarizationSetting& p, const SourceSpec& s) {
  FisherMatrix f;
  f.method = FisherMethod::ClosedForm;
  double scale;
  if (p.strategy == Strategy::Tuned) {
    scale = detection_probability(p);
  } else {
    scale = kappa_coefficient(p.nu);
    f.far_regime_approximation = true;
  }
  const Eigen::Vector3d sig = s.bandwidths();
  f.m = (scale * sig.array().square()).matrix().asDiagonal();
  return f;
}

namespace {

using Moments = std::array<double, 3>;  // zeroth, first, second

Moments plain_moments(const quadrature::Rule& r) {
  Moments m{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double z = r.nodes[i];
    m[0] += r.weights[i];
    m[1] += r.weights[i] * z;
    m[2] += r.weights[i] * z * z;
  }
  return m;
}

// Assemble E[g(beta w1) w w^T] from per-axis moments of the tensor rule.
Eigen::Matrix3d tensor_second_moments(const std::array<Moments, 3>& axis) {
  Eigen::Matrix3d out;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      std::array<int, 3> order{0, 0, 0};
      ++order[a];
      ++order[b];
      out(a, b) = axis[0][order[0]] * axis[1][order[1]] * axis[2][order[2]];
    }
  }
  return out;
}

Eigen::Matrix3d rotation_to_phase_axis(const Eigen::Vector3d& b) {
  const double beta = b.norm();
  if (beta == 0.0) return Eigen::Matrix3d::Identity();
  Eigen::HouseholderQR<Eigen::Vector3d> qr(b);
  Eigen::Matrix3d q = qr.householderQ();
  return q;
}

struct QuadratureEvaluation {
  Eigen::Matrix3d info;
  Eigen::Matrix3d info_coarse_transverse;
};

QuadratureEvaluation evaluate_rule(double visibility, double beta, const Eigen::Matrix3d& to_k,
                                   int panels, const QuadratureOptions& opts,
                                   const Moments& transverse, const Moments& transverse_coarse) {
  const auto along = quadrature::composite_normal(-opts.half_range, opts.half_range, panels,
                                                  opts.panel_order);
  Moments weighted{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < along.size(); ++i) {
    const double w = along.nodes[i];
    const double g = along.weights[i] * branch_information_weight(beta * w, visibility);
    weighted[0] += g;
    weighted[1] += g * w;
    weighted[2] += g * w * w;
  }
  const auto fine = tensor_second_moments({weighted, transverse, transverse});
  const auto coarse = tensor_second_moments({weighted, transverse_coarse, transverse_coarse});
  return {to_k * fine * to_k.transpose(), to_k * coarse * to_k.transpose()};
}

}  // namespace

FisherMatrix fi_quadrature(const PolarizationSetting& p, const SourceSpec& s,
                           const Offset3D& theta, const QuadratureOptions& opts) {
  const double v = visibility(p).value;
  const double scale = detection_probability(p);
  const Eigen::Vector3d sig = s.bandwidths();
  const Eigen::Vector3d b = sig.cwiseProduct(theta.vector());
  const double beta = b.norm();

  // k = diag(sigma) z, z = Q w, phase = beta * w1.
  const Eigen::Matrix3d to_k = sig.asDiagonal() * rotation_to_phase_axis(b);
  const Moments transverse = plain_moments(quadrature::gauss_hermite(opts.transverse_order));
  const Moments transverse_half =
      plain_moments(quadrature::gauss_hermite(std::max(2, opts.transverse_order / 2)));

  // Start near four panels per period of the weight along w1 (period pi/beta).
  const double periods = 2.0 * opts.half_range * beta / std::numbers::pi;
  int panels = std::max(8, static_cast<int>(std::ceil(4.0 * periods)));

  auto previous = evaluate_rule(v, beta, to_k, panels, opts, transverse, transverse_half);
  double err = std::numeric_limits<double>::infinity();
  while (panels <= opts.max_panels / 2) {
    panels *= 2;
    const auto current = evaluate_rule(v, beta, to_k, panels, opts, transverse, transverse_half);
    const double ref = current.info.cwiseAbs().maxCoeff();
    const double diff = std::max((current.info - previous.info).cwiseAbs().maxCoeff(),
                                 (current.info - current.info_coarse_transverse).cwiseAbs().maxCoeff());
    err = ref > 0.0 ? diff / ref : diff;
    previous = current;
    if (err < opts.relative_tolerance) break;
  }
  if (!(err < opts.relative_tolerance)) {
    throw ConvergenceError("Fisher quadrature did not reach relative tolerance", err);
  }

  FisherMatrix f;
  f.method = FisherMethod::Quadrature;
  f.m = scale * previous.info;
  f.m = 0.5 * (f.m + f.m.transpose()).eval();
  f.error_estimate = err;
  return f;
}

CrbReport crb(const FisherMatrix& f, std::uint64_t n_pairs) {
  if (n_pairs == 0) throw ValidationError("n_pairs must be positive");
  CrbReport r;
  r.n_pairs = n_pairs;
  const double n = static_cast<double>(n_pairs);
  const Eigen::Matrix3d& m = f.m;
  bool diagonal = true;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j && std::abs(m(i, j)) > 1e-12 * std::sqrt(std::abs(m(i, i) * m(j, j)))) {
        diagonal = false;
      }
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  if (diagonal) {
    for (int i = 0; i < 3; ++i) {
      r.std_bound[i] = m(i, i) > 0.0 ? 1.0 / std::sqrt(n * m(i, i)) : inf;
    }
    return r;
  }
  r.full_inverse = true;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) {
    r.std_bound.setConstant(inf);
    return r;
  }
  const Eigen::Matrix3d inv = lu.inverse();
  for (int i = 0; i < 3; ++i) r.std_bound[i] = std::sqrt(std::max(inv(i, i), 0.0) / n);
  return r;
}

double bucket_fisher(const PolarizationSetting& p, const SourceSpec& s, const Offset3D& theta,
                     Axis axis) {
  const double v = visibility(p).value;
  const double pc = bucket_coincidence_probability(theta, p, s);
  if (v == 0.0) return 0.0;
  if (pc <= 0.0 || pc >= 1.0) {
    throw DegenerateInformation("coincidence probability is exactly 0 or 1");
  }
  const Eigen::Vector3d sig = s.bandwidths();
  const Eigen::Vector3d th = theta.vector();
  const double big_s = sig.cwiseProduct(th).squaredNorm();
  const int a = static_cast<int>(axis);
  const double dpc = 0.5 * v * std::exp(-0.5 * big_s) * sig[a] * sig[a] * th[a];
  return detection_probability(p) * dpc * dpc / (pc * (1.0 - pc));
}

namespace {

constexpr std::size_t kMonteCarloChunk = 4096;

struct ChunkSums {
  Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> sum_sq = Eigen::Matrix<double, 6, 1>::Zero();
};

constexpr std::array<std::array<int, 2>, 6> kUpper{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};

}  // namespace

FisherMatrix fi_monte_carlo(const PolarizationSetting& p, const SourceSpec& s,
                            const Offset3D& theta, std::uint64_t n_samples, std::uint64_t seed,
                            const MonteCarloOptions& opts) {
  if (n_samples < 2) throw ValidationError("fi_monte_carlo needs at least 2 samples");
  const double v = visibility(p).value;
  const double scale = detection_probability(p);
  auto averaging = opts.averaging;
  if (averaging == ScoreAveraging::Auto) {
    averaging = v == 1.0 ? ScoreAveraging::Conditional : ScoreAveraging::Empirical;
  }
  const auto events = sample_conditional(seed, n_samples, theta, v, s, opts.threads);

  const std::size_t n_chunks = (events.size() + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<ChunkSums> partial(n_chunks);
  parallel_for(n_chunks, opts.threads, [&](std::size_t c) {
    ChunkSums acc;
    const std::size_t end = std::min(events.size(), (c + 1) * kMonteCarloChunk);
    for (std::size_t i = c * kMonteCarloChunk; i < end; ++i) {
      const auto& e = events[i];
      Eigen::Matrix3d outer;
      if (averaging == ScoreAveraging::Empirical) {
        const Eigen::Vector3d score = event_score(e, theta, v);
        outer = score * score.transpose();
      } else {
        const Eigen::Vector3d k = e.momentum();
        outer = branch_information_weight(phase(e, theta), v) * (k * k.transpose());
      }
      for (std::size_t u = 0; u < kUpper.size(); ++u) {
        const double x = outer(kUpper[u][0], kUpper[u][1]);
        acc.sum[u] += x;
        acc.sum_sq[u] += x * x;
      }
    }
    partial[c] = acc;
  });

  ChunkSums total;
  for (const auto& c : partial) {
    total.sum += c.sum;
    total.sum_sq += c.sum_sq;
  }
  const double n = static_cast<double>(events.size());
  FisherMatrix f;
  f.method = FisherMethod::MonteCarlo;
  Eigen::Matrix3d se;
  for (std::size_t u = 0; u < kUpper.size(); ++u) {
    const double mean = total.sum[u] / n;
    const double var = std::max(0.0, (total.sum_sq[u] / n - mean * mean) * n / (n - 1.0));
    const auto [i, j] = kUpper[u];
    f.m(i, j) = f.m(j, i) = scale * mean;
    se(i, j) = se(j, i) = scale * std::sqrt(var / n);
  }
  f.standard_error = se;
  return f;
}

}  // namespace homloc
