#include "homloc/sampler.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <optional>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "homloc/errors.hpp"
#include "homloc/parallel.hpp"
#include "homloc/physics.hpp"
#include "homloc/rng.hpp"

namespace homloc {

std::string scenario_digest(const Offset3D& theta, const PolarizationSetting& p,
                            const SourceSpec& s) {
  char text[512];
  std::snprintf(text, sizeof text,
                "theta=%.17g,%.17g,%.17g;nu=%.17g;c=%.17g,%.17g;d=%.17g,%.17g;strategy=%s;"
                "sigma=%.17g,%.17g,%.17g",
                theta.dx, theta.dy, theta.dt, p.nu, p.c_a, p.c_b, p.d_a, p.d_b,
                to_string(p.strategy), s.sigma_kx, s.sigma_ky, s.sigma_omega);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* c = text; *c != '\0'; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  return hex;
}

namespace {

// Draw order per pair: keep, four uniforms for three normals, tag.
struct PairDraw {
  bool kept;
  DetectionEvent event;
};

PairDraw draw_pair(std::uint64_t seed, std::uint64_t index, double keep_probability,
                   const Offset3D& theta, double visibility, const SourceSpec& s) {
  CounterRng rng(seed, index);
  const double u_keep = rng.uniform();
  DetectionEvent e;
  e.dkx = s.sigma_kx * rng.normal();
  e.dky = s.sigma_ky * rng.normal();
  e.domega = s.sigma_omega * rng.normal();
  const double u_tag = rng.uniform();
  const double p_coincidence =
      branch_probability(phase(e, theta), visibility, DetectorTag::DifferentDetectors);
  e.tag = u_tag < p_coincidence ? DetectorTag::DifferentDetectors : DetectorTag::SameDetector;
  return {u_keep < keep_probability, e};
}

}  // namespace

EventBatch sample_batch(std::uint64_t seed, std::uint64_t n_emitted, const Offset3D& theta,
                        const PolarizationSetting& p, const SourceSpec& s, int threads) {
  validate_polarization(p);
  const double v = visibility(p).value;
  const double keep = detection_probability(p);

  std::vector<std::optional<DetectionEvent>> slots(n_emitted);
  parallel_for(n_emitted, threads, [&](std::size_t i) {
    const auto d = draw_pair(seed, i, keep, theta, v, s);
    if (d.kept) slots[i] = d.event;
  });

  EventBatch batch;
  batch.n_emitted = n_emitted;
  batch.seed = seed;
  batch.scenario_digest = scenario_digest(theta, p, s);
  batch.generator = CounterRng::kGeneratorId;
  for (std::uint64_t i = 0; i < n_emitted; ++i) {
    if (slots[i]) {
      batch.events.push_back(*slots[i]);
      batch.pair_index.push_back(i);
    }
  }
  return batch;
}

std::vector<DetectionEvent> sample_conditional(std::uint64_t seed, std::uint64_t n,
                                               const Offset3D& theta, double visibility,
                                               const SourceSpec& s, int threads) {
  std::vector<DetectionEvent> events(n);
  parallel_for(n, threads, [&](std::size_t i) {
    events[i] = draw_pair(seed, i, 1.0, theta, visibility, s).event;
  });
  return events;
}

GoodnessOfFit empirical_check(const EventBatch& batch, const Offset3D& theta,
                              const PolarizationSetting& p, const SourceSpec& s,
                              double significance) {
  if (batch.events.empty()) throw ValidationError("empirical_check needs a nonempty batch");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw ValidationError("significance must lie in (0,1)");
  }
  const double v = visibility(p).value;
  const double n = static_cast<double>(batch.events.size());
  constexpr int kTests = 5;
  constexpr int kBins = 20;

  GoodnessOfFit r;
  r.per_test_threshold = significance / kTests;
  const boost::math::normal standard;
  auto two_sided = [&](double z) { return 2.0 * boost::math::cdf(boost::math::complement(standard, std::abs(z))); };

  const Eigen::Vector3d sig = s.bandwidths();
  Eigen::Vector3d mean_sq = Eigen::Vector3d::Zero();
  double coincidences = 0.0;
  std::vector<double> observed(kBins, 0.0), expected(kBins, 0.0), variance(kBins, 0.0);
  for (const auto& e : batch.events) {
    mean_sq += e.momentum().cwiseAbs2();
    const double ph = phase(e, theta);
    const double pc = branch_probability(ph, v, DetectorTag::DifferentDetectors);
    const bool is_coincidence = e.tag == DetectorTag::DifferentDetectors;
    coincidences += is_coincidence ? 1.0 : 0.0;
    const int bin = std::clamp(static_cast<int>((std::cos(ph) + 1.0) * 0.5 * kBins), 0, kBins - 1);
    observed[bin] += is_coincidence ? 1.0 : 0.0;
    expected[bin] += pc;
    variance[bin] += pc * (1.0 - pc);
  }
  mean_sq /= n;

  std::vector<double> p_values;
  for (int a = 0; a < 3; ++a) {
    const double var = sig[a] * sig[a];
    r.variance_z[a] = (mean_sq[a] - var) / (var * std::sqrt(2.0 / n));
    p_values.push_back(two_sided(r.variance_z[a]));
  }

  r.coincidence_fraction = coincidences / n;
  r.expected_coincidence_fraction = bucket_coincidence_probability(theta, p, s);
  const double pc = r.expected_coincidence_fraction;
  if (pc > 0.0 && pc < 1.0) {
    r.coincidence_z = (r.coincidence_fraction - pc) / std::sqrt(pc * (1.0 - pc) / n);
    p_values.push_back(two_sided(r.coincidence_z));
  } else {
    p_values.push_back(r.coincidence_fraction == pc ? 1.0 : 0.0);
  }

  bool impossible_outcome = false;
  for (int b = 0; b < kBins; ++b) {
    if (variance[b] > 1e-9) {
      const double d = observed[b] - expected[b];
      r.chi_square += d * d / variance[b];
      ++r.chi_square_dof;
    } else if (std::abs(observed[b] - expected[b]) > 0.5) {
      impossible_outcome = true;
    }
  }
  if (impossible_outcome) {
    p_values.push_back(0.0);
  } else if (r.chi_square_dof > 0) {
    const boost::math::chi_squared chi(r.chi_square_dof);
    p_values.push_back(boost::math::cdf(boost::math::complement(chi, r.chi_square)));
  } else {
    p_values.push_back(1.0);
  }

  r.min_p_value = *std::min_element(p_values.begin(), p_values.end());
  r.passed = r.min_p_value >= r.per_test_threshold;
  return r;
}

}  // namespace homloc
