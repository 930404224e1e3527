#include "homloc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "homloc/errors.hpp"
#include "homloc/parallel.hpp"
#include "homloc/physics.hpp"
#include "homloc/rng.hpp"
#include "homloc/sampler.hpp"

namespace homloc {

LogLikelihood log_likelihood(std::span<const DetectionEvent> events, const Offset3D& theta,
                             double visibility) {
  LogLikelihood ll;
  for (const auto& e : events) {
    const double f = branch_factor(phase(e, theta), visibility, e.tag);
    if (f < kLogFloor) {
      ++ll.n_floored;
      ll.value += std::log(kLogFloor);
    } else {
      ll.value += std::log(f);
    }
  }
  return ll;
}

LogLikelihood log_likelihood(std::span<const DetectionEvent> events, const Offset3D& theta,
                             const PolarizationSetting& p, const SourceSpec& s) {
  SourceSpec::make(s.sigma_kx, s.sigma_ky, s.sigma_omega);
  return log_likelihood(events, theta, visibility(p).value);
}

Eigen::Vector3d log_likelihood_gradient(std::span<const DetectionEvent> events,
                                        const Offset3D& theta, double visibility) {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const auto& e : events) {
    const double ph = phase(e, theta);
    const double f = std::max(branch_factor(ph, visibility, e.tag), kLogFloor);
    g += (-visibility * sign(e.tag) * std::sin(ph) / f) * e.momentum();
  }
  return g;
}

std::vector<double> log_likelihood_grid(std::span<const DetectionEvent> events, double visibility,
                                        std::span<const double> xs, std::span<const double> ys,
                                        std::span<const double> ts) {
  const std::size_t n = events.size();
  // exp(i k_a theta_a) per node and event, split into cos/sin planes.
  auto planes = [&](std::span<const double> nodes, auto component) {
    std::pair<std::vector<double>, std::vector<double>> cs;
    cs.first.resize(nodes.size() * n);
    cs.second.resize(nodes.size() * n);
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      for (std::size_t e = 0; e < n; ++e) {
        const double ph = component(events[e]) * nodes[m];
        cs.first[m * n + e] = std::cos(ph);
        cs.second[m * n + e] = std::sin(ph);
      }
    }
    return cs;
  };
  const auto [cx, sx] = planes(xs, [](const DetectionEvent& e) { return e.dkx; });
  const auto [cy, sy] = planes(ys, [](const DetectionEvent& e) { return e.dky; });
  const auto [ct, st] = planes(ts, [](const DetectionEvent& e) { return e.domega; });

  std::vector<double> tv(n);
  for (std::size_t e = 0; e < n; ++e) tv[e] = visibility * sign(events[e].tag);

  constexpr std::size_t kChunk = 32;
  const double log_floor = std::log(kLogFloor);
  std::vector<double> re(n), im(n), f(kChunk);
  std::vector<double> out(xs.size() * ys.size() * ts.size());
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
      const double* ax = &cx[ix * n];
      const double* bx = &sx[ix * n];
      const double* ay = &cy[iy * n];
      const double* by = &sy[iy * n];
      for (std::size_t e = 0; e < n; ++e) {
        re[e] = ax[e] * ay[e] - bx[e] * by[e];
        im[e] = bx[e] * ay[e] + ax[e] * by[e];
      }
      for (std::size_t it = 0; it < ts.size(); ++it) {
        const double* at = &ct[it * n];
        const double* bt = &st[it * n];
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += kChunk) {
          const std::size_t len = std::min(kChunk, n - start);
          double prod = 1.0;
          double lowest = 2.0;
          for (std::size_t j = 0; j < len; ++j) {
            const std::size_t e = start + j;
            const double v = 1.0 + tv[e] * (re[e] * at[e] - im[e] * bt[e]);
            f[j] = v;
            prod *= v;
            lowest = std::min(lowest, v);
          }
          if (lowest >= kLogFloor && prod > 1e-280) {
            total += std::log(prod);
          } else {
            for (std::size_t j = 0; j < len; ++j) {
              total += f[j] >= kLogFloor ? std::log(f[j]) : log_floor;
            }
          }
        }
        out[(ix * ys.size() + iy) * ts.size() + it] = total;
      }
    }
  }
  return out;
}

namespace {

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v(points);
  if (points == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
  return v;
}

double quantile_abs(std::span<const DetectionEvent> events, int axis, double q) {
  std::vector<double> a(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) a[i] = std::abs(events[i].momentum()[axis]);
  const auto k = static_cast<std::size_t>(q * static_cast<double>(a.size() - 1));
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
  return a[k];
}

struct GridPoint {
  Eigen::Vector3d theta;
  double value;
};

std::vector<GridPoint> best_points(std::span<const DetectionEvent> events, double v,
                                   const std::array<std::vector<double>, 3>& axes,
                                   std::size_t count) {
  const auto values = log_likelihood_grid(events, v, axes[0], axes[1], axes[2]);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  const std::size_t ny = axes[1].size(), nt = axes[2].size();
  std::vector<GridPoint> out;
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t idx = order[r];
    const std::size_t ix = idx / (ny * nt), iy = (idx / nt) % ny, it = idx % nt;
    out.push_back({{axes[0][ix], axes[1][iy], axes[2][it]}, values[idx]});
  }
  return out;
}

Eigen::Matrix3d hessian_fd(std::span<const DetectionEvent> events, const Eigen::Vector3d& theta,
                           double v, const Eigen::Vector3d& steps) {
  Eigen::Matrix3d h;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d up = theta, down = theta;
    up[j] += steps[j];
    down[j] -= steps[j];
    h.col(j) = (log_likelihood_gradient(events, Offset3D::from_vector(up), v) -
                log_likelihood_gradient(events, Offset3D::from_vector(down), v)) /
               (2.0 * steps[j]);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

MleResult mle_fit(std::span<const DetectionEvent> events, const PolarizationSetting& p,
                  const SourceSpec& s, const SearchConfig& search) {
  if (events.size() < std::max<std::size_t>(search.min_events, 1)) {
    throw ValidationError("mle_fit needs at least " + std::to_string(search.min_events) +
                          " events, got " + std::to_string(events.size()));
  }
  for (const auto& [lo, hi] : search.box) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo)) {
      throw ValidationError("search box bounds must be finite with hi > lo");
    }
  }
  if (search.orientation.norm() == 0.0 || !search.orientation.allFinite()) {
    throw ValidationError("search orientation must be a finite nonzero vector");
  }
  if (search.grid_points < 2 || search.refine_points < 3) {
    throw ValidationError("grid_points must be >= 2 and refine_points >= 3");
  }
  const double v = visibility(p).value;
  const Eigen::Vector3d sig = s.bandwidths();
  const double n = static_cast<double>(events.size());

  MleResult result;
  result.n_events_used = events.size();

  // Stage 1: coarse grid obeying the basin-spacing rule.
  std::array<std::vector<double>, 3> axes;
  Eigen::Vector3d lo, hi, spacing;
  for (int a = 0; a < 3; ++a) {
    lo[a] = search.box[a].first;
    hi[a] = search.box[a].second;
    const double q99 = quantile_abs(events, a, 0.99);
    int points = search.grid_points;
    if (q99 > 0.0) {
      const double max_spacing = std::numbers::pi / (3.0 * q99);
      const int needed = static_cast<int>(std::ceil((hi[a] - lo[a]) / max_spacing)) + 1;
      points = std::max(points, needed);
    }
    if (points > search.max_grid_points) {
      throw ValidationError("search box axis " + std::to_string(a) + " needs " +
                            std::to_string(points) + " grid points (cap " +
                            std::to_string(search.max_grid_points) +
                            "); shrink the box or raise max_grid_points");
    }
    result.grid_points[a] = points;
    axes[a] = linspace(lo[a], hi[a], points);
    spacing[a] = (hi[a] - lo[a]) / (points - 1);
  }
  const auto candidates =
      best_points(events, v, axes, static_cast<std::size_t>(std::max(1, search.refine_candidates)));

  // Stage 2a: nested local grids around each candidate.
  GridPoint best = candidates.front();
  for (const auto& start : candidates) {
    GridPoint current = start;
    Eigen::Vector3d half = spacing;
    for (int level = 0; level < search.refine_levels; ++level) {
      std::array<std::vector<double>, 3> local;
      for (int a = 0; a < 3; ++a) {
        local[a] = linspace(std::max(lo[a], current.theta[a] - half[a]),
                            std::min(hi[a], current.theta[a] + half[a]), search.refine_points);
      }
      const auto top = best_points(events, v, local, 1).front();
      if (top.value > current.value) current = top;
      half *= 2.0 / (search.refine_points - 1);
    }
    if (current.value > best.value) best = current;
  }

  // Stage 2b: Newton ascent.
  Eigen::Vector3d theta = best.theta;
  LogLikelihood ll = log_likelihood(events, Offset3D::from_vector(theta), v);
  const Eigen::Vector3d steps = search.hessian_step * sig.cwiseInverse();
  auto scaled_norm = [&](const Eigen::Vector3d& g) {
    return (g.cwiseQuotient(n * sig)).cwiseAbs().maxCoeff();
  };
  auto clamp = [&](Eigen::Vector3d t) {
    bool clipped = false;
    for (int a = 0; a < 3; ++a) {
      if (t[a] < lo[a]) t[a] = lo[a], clipped = true;
      if (t[a] > hi[a]) t[a] = hi[a], clipped = true;
    }
    return std::pair{t, clipped};
  };

  Eigen::Vector3d grad = log_likelihood_gradient(events, Offset3D::from_vector(theta), v);
  bool gradient_ok = scaled_norm(grad) < search.gradient_tolerance;
  int iter = 0;
  for (; iter < search.max_iterations && !gradient_ok; ++iter) {
    if (search.keep_trace) {
      result.trace.push_back({Offset3D::from_vector(theta), ll.value, scaled_norm(grad)});
    }
    const Eigen::Matrix3d h = hessian_fd(events, theta, v, steps);
    Eigen::Vector3d direction;
    Eigen::LLT<Eigen::Matrix3d> llt(-h);
    if (llt.info() == Eigen::Success) {
      direction = llt.solve(grad);
    } else {
      direction = grad.cwiseQuotient(n * sig.cwiseAbs2());
    }
    bool accepted = false;
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const auto [candidate, clipped] = clamp(theta + t * direction);
      (void)clipped;
      const auto cand_ll = log_likelihood(events, Offset3D::from_vector(candidate), v);
      if (cand_ll.n_floored <= ll.n_floored &&
          cand_ll.value >= ll.value - 1e-12 * std::abs(ll.value)) {
        accepted = (candidate - theta).norm() > 0.0;
        theta = candidate;
        ll = cand_ll;
        break;
      }
    }
    grad = log_likelihood_gradient(events, Offset3D::from_vector(theta), v);
    gradient_ok = scaled_norm(grad) < search.gradient_tolerance;
    if (!accepted) break;
  }

  for (int a = 0; a < 3; ++a) {
    const double tol = 1e-9 * (hi[a] - lo[a]);
    if (theta[a] <= lo[a] + tol || theta[a] >= hi[a] - tol) result.at_boundary = true;
  }
  if (search.orientation.dot(theta) < 0.0) theta = -theta;

  result.theta_hat = Offset3D::from_vector(theta);
  result.log_likelihood = ll.value;
  result.n_floored = ll.n_floored;
  result.iterations = iter;
  result.scaled_gradient = scaled_norm(grad);
  result.observed_information = -hessian_fd(events, theta, v, steps);
  if (search.keep_trace) {
    result.trace.push_back({result.theta_hat, ll.value, result.scaled_gradient});
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(result.observed_information);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  const bool psd = eig.eigenvalues().minCoeff() >= -1e-9 * std::max(top, 1.0);
  const bool positive = eig.eigenvalues().minCoeff() > 0.0;
  if (positive) {
    const Eigen::Matrix3d cov = result.observed_information.inverse();
    result.standard_error = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  } else {
    result.standard_error.setConstant(std::numeric_limits<double>::infinity());
  }
  result.converged = gradient_ok && psd && !result.at_boundary;
  return result;
}

ReplicationSummary replicate(std::uint64_t master_seed, std::size_t replications,
                             std::uint64_t n_per_replication, const Offset3D& theta,
                             const PolarizationSetting& p, const SourceSpec& s,
                             const SearchConfig& search, int threads) {
  if (replications < 2) throw ValidationError("replicate needs at least 2 replications");
  if (n_per_replication == 0) throw ValidationError("n_per_replication must be positive");

  ReplicationSummary summary;
  summary.replications = replications;
  summary.n_per_replication = n_per_replication;
  summary.truth = theta;
  summary.runs.resize(replications);

  parallel_for(replications, threads, [&](std::size_t r) {
    ReplicationRecord rec;
    rec.seed = derive_seed(master_seed, r);
    const auto batch = sample_batch(rec.seed, n_per_replication, theta, p, s, 1);
    rec.n_detected = batch.n_detected();
    if (batch.n_detected() >= search.min_events) {
      rec.fit = mle_fit(batch.events, p, s, search);
    } else {
      rec.fit.n_events_used = batch.n_detected();
    }
    summary.runs[r] = std::move(rec);
  });

  std::vector<Eigen::Vector3d> kept;
  for (const auto& r : summary.runs) {
    if (r.fit.converged) kept.push_back(r.fit.theta_hat.vector());
  }
  summary.n_excluded = replications - kept.size();
  if (!kept.empty()) {
    for (const auto& k : kept) summary.mean += k;
    summary.mean /= static_cast<double>(kept.size());
    if (kept.size() > 1) {
      for (const auto& k : kept) {
        const Eigen::Vector3d d = k - summary.mean;
        summary.covariance += d * d.transpose();
      }
      summary.covariance /= static_cast<double>(kept.size() - 1);
    }
  }
  summary.bias = summary.mean - theta.vector();
  summary.empirical_std = summary.covariance.diagonal().cwiseSqrt();
  summary.crb = crb(fi_quadrature(p, s, theta), n_per_replication);
  summary.std_over_crb = summary.empirical_std.cwiseQuotient(summary.crb.std_bound);
  return summary;
}

}  // namespace homloc
