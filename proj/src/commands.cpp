#include "homloc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "homloc/errors.hpp"
#include "homloc/event_io.hpp"
#include "homloc/fisher.hpp"
#include "homloc/parallel.hpp"
#include "homloc/physics.hpp"
#include "homloc/rng.hpp"
#include "homloc/sampler.hpp"

namespace homloc::cli {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

using Row = std::vector<std::string>;

std::string join(const Row& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) s += ',';
    s += r[i];
  }
  return s;
}

// Writes to --out when given, else to the fallback stream.
class TableSink {
 public:
  TableSink(const std::optional<std::filesystem::path>& path, std::ostream& fallback) {
    if (path) {
      file_.open(*path, std::ios::binary);
      if (!file_) throw IoError("cannot open " + path->string() + " for writing");
      stream_ = &file_;
    } else {
      stream_ = &fallback;
    }
  }
  void row(const Row& r) { *stream_ << join(r) << '\n'; }
  void comment(const std::string& s) { *stream_ << "# " << s << '\n'; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("failed writing table");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::optional<std::filesystem::path> table_path(const ScenarioConfig& c, const CommandOptions& o) {
  if (o.out) return o.out;
  if (c.output.table) return std::filesystem::path(*c.output.table);
  return std::nullopt;
}

std::uint64_t pairs_or_default(const ScenarioConfig& c, std::ostream& err) {
  if (c.n_pairs) return *c.n_pairs;
  err << "note: counts.n_pairs not set; using N = " << kDefaultPairs << '\n';
  return kDefaultPairs;
}

std::string units_line(const ScenarioConfig& c) {
  return "units: length=" + (c.length_unit.empty() ? std::string("(unitless)") : c.length_unit) +
         " time=" + (c.time_unit.empty() ? std::string("(unitless)") : c.time_unit) +
         "; information per length^2 / time^2";
}

Row matrix_cells(const Eigen::Matrix3d& m) {
  return {format_real(m(0, 0)), format_real(m(1, 1)), format_real(m(2, 2)),
          format_real(m(0, 1)), format_real(m(0, 2)), format_real(m(1, 2))};
}

double scale_coefficient(const PolarizationSetting& p) {
  return p.strategy == Strategy::Tuned ? detection_probability(p) : kappa_coefficient(p.nu);
}

}  // namespace

int cmd_fisher(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
               std::ostream& err) {
  const auto s = c.source();
  const auto p = c.polarization();
  const auto n = pairs_or_default(c, err);
  const auto closed = fim_closed_form(p, s);
  const auto quad = fi_quadrature(p, s, c.offset);

  TableSink sink(table_path(c, o), out);
  sink.comment(units_line(c));
  sink.comment(std::string("strategy=") + to_string(p.strategy) + " nu=" + format_real(p.nu) +
               " d_a=" + format_real(p.d_a) + " visibility=" + format_real(visibility(p).value) +
               " scale=" + format_real(scale_coefficient(p)));
  if (closed.far_regime_approximation) {
    sink.comment("closed_form row is the far-regime (sigma*offset >> 1) approximation");
  }
  sink.row({"method", "f_xx", "f_yy", "f_tt", "f_xy", "f_xt", "f_yt", "n_pairs", "crb_dx",
            "crb_dy", "crb_dt", "far_regime_approximation", "error_estimate"});
  for (const auto* f : {&closed, &quad}) {
    const auto bound = crb(*f, n);
    Row r{to_string(f->method)};
    const auto cells = matrix_cells(f->m);
    r.insert(r.end(), cells.begin(), cells.end());
    r.push_back(std::to_string(n));
    for (int i = 0; i < 3; ++i) r.push_back(format_real(bound.std_bound[i]));
    r.push_back(f->far_regime_approximation ? "true" : "false");
    r.push_back(format_real(f->error_estimate));
    sink.row(r);
  }
  sink.finish();
  return kExitOk;
}

int cmd_scan(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
             std::ostream& /*err*/) {
  if (!c.sweep) throw ConfigError("/sweep", "scan requires a sweep section");
  const auto& sw = *c.sweep;
  std::uint64_t total = sw.strategies.size();
  for (const auto& a : sw.axes) {
    total *= static_cast<std::uint64_t>(a.points);
    if (total > sw.max_points) break;
  }
  if (total > sw.max_points) {
    throw ConfigError("/sweep", "grid has more than " + std::to_string(sw.max_points) +
                                    " points; reduce axis points or raise sweep.max_points");
  }
  const auto s = c.source();

  struct Point {
    Strategy strategy;
    std::map<std::string, double> at;
  };
  std::vector<Point> points;
  std::vector<std::vector<double>> values;
  for (const auto& a : sw.axes) values.push_back(a.values());
  std::size_t per_strategy = 1;
  for (const auto& v : values) per_strategy *= v.size();
  for (auto strat : sw.strategies) {
    for (std::size_t flat = 0; flat < per_strategy; ++flat) {
      Point pt{strat, {}};
      std::size_t rest = flat;
      for (std::size_t a = sw.axes.size(); a-- > 0;) {
        pt.at[sw.axes[a].name] = values[a][rest % values[a].size()];
        rest /= values[a].size();
      }
      points.push_back(std::move(pt));
    }
  }

  std::vector<Row> rows(points.size());
  parallel_for(points.size(), o.threads, [&](std::size_t i) {
    const auto& pt = points[i];
    auto pick = [&](const char* name, double fallback) {
      const auto it = pt.at.find(name);
      return it == pt.at.end() ? fallback : it->second;
    };
    const double nu = pick("nu", c.nu);
    const Offset3D theta{pick("dx", c.offset.dx), pick("dy", c.offset.dy), pick("dt", c.offset.dt)};
    PolarizationSetting p;
    if (pt.strategy == Strategy::Tuned) {
      const auto it = pt.at.find("d_a");
      p = it != pt.at.end() ? PolarizationSetting::tuned(nu, it->second) : c.polarization(Strategy::Tuned, nu);
    } else {
      p = PolarizationSetting::non_tuned(nu);
    }
    const auto f = pt.strategy == Strategy::Tuned ? fim_closed_form(p, s) : fi_quadrature(p, s, theta);
    Row r{to_string(pt.strategy), format_real(nu),
          pt.strategy == Strategy::Tuned ? format_real(p.d_a) : std::string(),
          format_real(theta.dx), format_real(theta.dy), format_real(theta.dt),
          format_real(visibility(p).value), format_real(scale_coefficient(p))};
    const auto cells = matrix_cells(f.m);
    r.insert(r.end(), cells.begin(), cells.end());
    r.push_back(to_string(f.method));
    r.push_back(format_real(f.error_estimate));
    rows[i] = std::move(r);
  });

  TableSink sink(table_path(c, o), out);
  sink.row({"strategy", "nu", "d_a", "dx", "dy", "dt", "visibility", "scale", "f_xx", "f_yy",
            "f_tt", "f_xy", "f_xt", "f_yt", "method", "error_estimate"});
  for (const auto& r : rows) sink.row(r);
  sink.finish();
  return kExitOk;
}

int cmd_simulate(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
                 std::ostream& err) {
  std::filesystem::path path;
  if (o.out) {
    path = *o.out;
  } else if (c.output.events) {
    path = *c.output.events;
  } else {
    throw ConfigError("/output/events", "simulate needs an event file path (--out or output.events)");
  }
  const auto n = pairs_or_default(c, err);
  const auto seed = o.seed.value_or(c.seed);
  const auto batch = sample_batch(seed, n, c.offset, c.polarization(), c.source(), o.threads);
  write_events_file(path, batch);

  std::size_t coincidences = 0;
  for (const auto& e : batch.events) coincidences += e.tag == DetectorTag::DifferentDetectors;
  const double detected = static_cast<double>(batch.n_detected());
  out << "n_emitted,n_detected,detection_ratio,coincidence_fraction,seed,scenario_digest\n"
      << batch.n_emitted << ',' << batch.n_detected() << ','
      << format_real(detected / static_cast<double>(batch.n_emitted)) << ','
      << format_real(detected > 0 ? static_cast<double>(coincidences) / detected : 0.0) << ','
      << seed << ',' << batch.scenario_digest << '\n';
  return kExitOk;
}

int cmd_estimate(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
                 std::ostream& err) {
  std::filesystem::path path;
  if (o.events) {
    path = *o.events;
  } else if (c.output.events) {
    path = *c.output.events;
  } else {
    throw ConfigError("/output/events", "estimate needs an event file (--events or output.events)");
  }
  const auto batch = read_events_file(path);
  const auto p = c.polarization();
  const auto s = c.source();
  const auto digest = scenario_digest(c.offset, p, s);
  if (digest != batch.scenario_digest) {
    if (!o.override_digest) {
      throw ConfigError("/", "event file digest " + batch.scenario_digest +
                                 " does not match the configured scenario " + digest +
                                 " (use --override-digest to fit anyway)");
    }
    err << "warning: scenario digest mismatch overridden\n";
  }
  const auto search = c.search.value_or(SearchConfig{});
  if (batch.events.size() < search.min_events) {
    throw ConfigError("/search/min_events", "event file holds " + std::to_string(batch.events.size()) +
                                                " events; at least " +
                                                std::to_string(search.min_events) + " required");
  }
  const auto fit = mle_fit(batch.events, p, s, search);

  TableSink sink(table_path(c, o), out);
  sink.comment(units_line(c));
  sink.row({"n_events", "dx_hat", "dy_hat", "dt_hat", "se_dx", "se_dy", "se_dt", "log_likelihood",
            "converged", "at_boundary", "iterations", "n_floored"});
  sink.row({std::to_string(fit.n_events_used), format_real(fit.theta_hat.dx),
            format_real(fit.theta_hat.dy), format_real(fit.theta_hat.dt),
            format_real(fit.standard_error[0]), format_real(fit.standard_error[1]),
            format_real(fit.standard_error[2]), format_real(fit.log_likelihood),
            fit.converged ? "true" : "false", fit.at_boundary ? "true" : "false",
            std::to_string(fit.iterations), std::to_string(fit.n_floored)});
  sink.finish();
  if (!fit.converged) {
    err << "error: maximum-likelihood search did not converge (scaled gradient "
        << format_real(fit.scaled_gradient) << (fit.at_boundary ? ", estimate on box boundary" : "")
        << ")\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

int cmd_experiment(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
                   std::ostream& err) {
  if (!c.replications) throw ConfigError("/counts/replications", "required for experiment");
  if (*c.replications < 2) throw ConfigError("/counts/replications", "must be at least 2");
  std::vector<std::uint64_t> sizes = c.sample_sizes;
  if (sizes.empty()) sizes.push_back(pairs_or_default(c, err));
  const std::vector<Offset3D> offsets = c.offsets.empty() ? std::vector{c.offset} : c.offsets;
  const auto p = c.polarization();
  const auto s = c.source();
  const auto search = c.search.value_or(SearchConfig{});
  const auto master = o.seed.value_or(c.seed);

  std::optional<TableSink> reps;
  if (c.output.replications) {
    reps.emplace(std::filesystem::path(*c.output.replications), out);
    reps->row({"dx_true", "dy_true", "dt_true", "n_pairs", "replication", "seed", "n_detected",
               "dx_hat", "dy_hat", "dt_hat", "converged", "log_likelihood"});
  }
  TableSink sink(table_path(c, o), out);
  sink.comment(units_line(c));
  sink.row({"dx_true", "dy_true", "dt_true", "n_pairs", "replications", "n_excluded", "mean_dx",
            "mean_dy", "mean_dt", "std_dx", "std_dy", "std_dt", "crb_dx", "crb_dy", "crb_dt",
            "ratio_dx", "ratio_dy", "ratio_dt"});
  std::size_t excluded = 0;
  std::uint64_t combo = 0;
  for (const auto& theta : offsets) {
    for (const auto n : sizes) {
      const auto summary = replicate(derive_seed(master, combo++), *c.replications, n, theta, p,
                                     s, search, o.threads);
      excluded += summary.n_excluded;
      Row r{format_real(theta.dx), format_real(theta.dy), format_real(theta.dt),
            std::to_string(n), std::to_string(summary.replications),
            std::to_string(summary.n_excluded)};
      for (int a = 0; a < 3; ++a) r.push_back(format_real(summary.mean[a]));
      for (int a = 0; a < 3; ++a) r.push_back(format_real(summary.empirical_std[a]));
      for (int a = 0; a < 3; ++a) r.push_back(format_real(summary.crb.std_bound[a]));
      for (int a = 0; a < 3; ++a) r.push_back(format_real(summary.std_over_crb[a]));
      sink.row(r);
      if (reps) {
        for (std::size_t i = 0; i < summary.runs.size(); ++i) {
          const auto& run = summary.runs[i];
          reps->row({format_real(theta.dx), format_real(theta.dy), format_real(theta.dt),
                     std::to_string(n), std::to_string(i), std::to_string(run.seed),
                     std::to_string(run.n_detected), format_real(run.fit.theta_hat.dx),
                     format_real(run.fit.theta_hat.dy), format_real(run.fit.theta_hat.dt),
                     run.fit.converged ? "true" : "false", format_real(run.fit.log_likelihood)});
        }
      }
    }
  }
  sink.finish();
  if (reps) reps->finish();
  if (excluded > 0) {
    err << "note: " << excluded << " non-converged replication(s) excluded from summaries\n";
  }
  return kExitOk;
}

int cmd_compare(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out,
                std::ostream& err) {
  const auto s = c.source();
  const auto n = pairs_or_default(c, err);
  const auto tuned = c.polarization(Strategy::Tuned, c.nu);
  const auto plain = PolarizationSetting::non_tuned(c.nu);
  const auto f_tuned = fim_closed_form(tuned, s);
  const auto f_plain = fim_closed_form(plain, s);
  const auto f_plain_quad = fi_quadrature(plain, s, c.offset);
  const auto b_tuned = crb(f_tuned, n);
  const auto b_plain = crb(f_plain, n);

  TableSink sink(table_path(c, o), out);
  sink.comment(units_line(c));
  sink.row({"strategy", "nu", "d_a", "visibility", "scale", "f_xx", "f_yy", "f_tt", "n_pairs",
            "crb_dx", "crb_dy", "crb_dt", "method", "far_regime_approximation"});
  auto emit = [&](const PolarizationSetting& p, const FisherMatrix& f, const std::string& label) {
    const auto b = crb(f, n);
    sink.row({label, format_real(p.nu),
              p.strategy == Strategy::Tuned ? format_real(p.d_a) : std::string(),
              format_real(visibility(p).value), format_real(scale_coefficient(p)),
              format_real(f.m(0, 0)), format_real(f.m(1, 1)), format_real(f.m(2, 2)),
              std::to_string(n), format_real(b.std_bound[0]), format_real(b.std_bound[1]),
              format_real(b.std_bound[2]), to_string(f.method),
              f.far_regime_approximation ? "true" : "false"});
  };
  emit(tuned, f_tuned, "tuned");
  emit(plain, f_plain, "non_tuned");
  emit(plain, f_plain_quad, "non_tuned");
  Row ratio{"ratio_non_tuned_over_tuned", format_real(c.nu), "", "", "", "", "", "",
            std::to_string(n)};
  for (int a = 0; a < 3; ++a) ratio.push_back(format_real(b_plain.std_bound[a] / b_tuned.std_bound[a]));
  ratio.push_back("closed_form");
  ratio.push_back("true");
  sink.row(ratio);
  sink.finish();
  return kExitOk;
}

int dispatch(const std::string& command, const std::filesystem::path& config_path,
             const CommandOptions& options, std::ostream& out, std::ostream& err) {
  static const std::map<std::string,
                        std::function<int(const ScenarioConfig&, const CommandOptions&,
                                          std::ostream&, std::ostream&)>>
      commands{{"fisher", cmd_fisher},         {"scan", cmd_scan},
               {"simulate", cmd_simulate},     {"estimate", cmd_estimate},
               {"experiment", cmd_experiment}, {"compare", cmd_compare}};
  const auto it = commands.find(command);
  if (it == commands.end()) {
    err << "error: unknown command " << command << '\n';
    return kExitConfig;
  }
  try {
    auto config = load_config(config_path);
    return it->second(config, options, out, err);
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedRegime& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateInformation& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const ConvergenceError& e) {
    err << "numeric error: " << e.what() << " (estimated error " << format_real(e.error_estimate())
        << ")\n";
    return kExitNonConvergence;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace homloc::cli
