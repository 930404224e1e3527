#include "homloc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "homloc/errors.hpp"
#include "homloc/physics.hpp"

namespace homloc::cli {

using nlohmann::json;

std::vector<double> SweepAxis::values() const {
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) {
    v[i] = points == 1 ? min : min + (max - min) * i / (points - 1);
  }
  return v;
}

Strategy parse_strategy(const std::string& s, const std::string& path) {
  if (s == "tuned") return Strategy::Tuned;
  if (s == "non_tuned") return Strategy::NonTuned;
  throw ConfigError(path, "strategy must be \"tuned\" or \"non_tuned\", got \"" + s + "\"");
}

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(path + "/" + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path) {
  const std::string here = path + "/" + key;
  if (!obj.contains(key)) throw ConfigError(here, "required field missing");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(here, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(here, "must be finite");
  return d;
}

std::uint64_t get_count(const json& v, const std::string& here) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(here, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& here) {
  if (!v.is_string()) throw ConfigError(here, "expected a string");
  return v.get<std::string>();
}

template <typename F>
auto wrap_validation(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

Offset3D parse_offset(const json& obj, const std::string& path) {
  check_keys(obj, path, {"dx", "dy", "dt"});
  return Offset3D::make(get_number(obj, "dx", path), get_number(obj, "dy", path),
                        get_number(obj, "dt", path));
}

json offset_json(const Offset3D& o) { return json{{"dx", o.dx}, {"dy", o.dy}, {"dt", o.dt}}; }

SearchConfig parse_search(const json& obj, const std::string& path) {
  check_keys(obj, path, {"box", "grid_points", "refine_levels", "refine_points",
                         "refine_candidates", "max_iterations", "min_events", "orientation"});
  SearchConfig sc;
  if (obj.contains("box")) {
    const auto& box = obj.at("box");
    const std::string bp = path + "/box";
    if (!box.is_array() || box.size() != 3) throw ConfigError(bp, "expected three [lo, hi] pairs");
    for (std::size_t a = 0; a < 3; ++a) {
      const std::string ap = bp + "/" + std::to_string(a);
      if (!box[a].is_array() || box[a].size() != 2 || !box[a][0].is_number() ||
          !box[a][1].is_number()) {
        throw ConfigError(ap, "expected [lo, hi]");
      }
      const double lo = box[a][0].get<double>(), hi = box[a][1].get<double>();
      if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo)) {
        throw ConfigError(ap, "need finite bounds with hi > lo");
      }
      sc.box[a] = {lo, hi};
    }
  }
  auto int_field = [&](const char* key, int& target, int min_value) {
    if (!obj.contains(key)) return;
    const std::string here = path + "/" + key;
    const auto v = get_count(obj.at(key), here);
    if (v < static_cast<std::uint64_t>(min_value) || v > 100000) {
      throw ConfigError(here, "out of range");
    }
    target = static_cast<int>(v);
  };
  int_field("grid_points", sc.grid_points, 2);
  int_field("refine_levels", sc.refine_levels, 0);
  int_field("refine_points", sc.refine_points, 3);
  int_field("refine_candidates", sc.refine_candidates, 1);
  int_field("max_iterations", sc.max_iterations, 1);
  if (obj.contains("min_events")) sc.min_events = get_count(obj.at("min_events"), path + "/min_events");
  if (obj.contains("orientation")) {
    const auto& h = obj.at("orientation");
    const std::string hp = path + "/orientation";
    if (!h.is_array() || h.size() != 3) throw ConfigError(hp, "expected three numbers");
    for (std::size_t a = 0; a < 3; ++a) {
      if (!h[a].is_number()) throw ConfigError(hp + "/" + std::to_string(a), "expected a number");
      sc.orientation[a] = h[a].get<double>();
    }
    if (!sc.orientation.allFinite() || sc.orientation.norm() == 0.0) {
      throw ConfigError(hp, "must be a finite nonzero vector");
    }
  }
  return sc;
}

json search_json(const SearchConfig& sc) {
  json box = json::array();
  for (const auto& [lo, hi] : sc.box) box.push_back(json::array({lo, hi}));
  return json{{"box", box},
              {"grid_points", sc.grid_points},
              {"refine_levels", sc.refine_levels},
              {"refine_points", sc.refine_points},
              {"refine_candidates", sc.refine_candidates},
              {"max_iterations", sc.max_iterations},
              {"min_events", sc.min_events},
              {"orientation", json::array({sc.orientation[0], sc.orientation[1], sc.orientation[2]})}};
}

SweepSpec parse_sweep(const json& obj, const std::string& path) {
  check_keys(obj, path, {"axes", "strategies", "max_points"});
  SweepSpec sw;
  if (!obj.contains("axes") || !obj.at("axes").is_array() || obj.at("axes").empty()) {
    throw ConfigError(path + "/axes", "expected a nonempty array of axes");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < obj.at("axes").size(); ++i) {
    const auto& a = obj.at("axes")[i];
    const std::string ap = path + "/axes/" + std::to_string(i);
    check_keys(a, ap, {"name", "min", "max", "points"});
    SweepAxis ax;
    if (!a.contains("name")) throw ConfigError(ap + "/name", "required field missing");
    ax.name = get_string(a.at("name"), ap + "/name");
    static const std::set<std::string> names{"nu", "d_a", "dx", "dy", "dt"};
    if (!names.count(ax.name)) {
      throw ConfigError(ap + "/name", "axis must be one of nu, d_a, dx, dy, dt");
    }
    if (!seen.insert(ax.name).second) throw ConfigError(ap + "/name", "axis listed twice");
    ax.min = get_number(a, "min", ap);
    ax.max = get_number(a, "max", ap);
    if (!a.contains("points")) throw ConfigError(ap + "/points", "required field missing");
    const auto pts = get_count(a.at("points"), ap + "/points");
    if (pts < 1 || pts > 10'000'000) throw ConfigError(ap + "/points", "must be >= 1");
    ax.points = static_cast<int>(pts);
    if (ax.max < ax.min) throw ConfigError(ap, "max must be >= min");
    if ((ax.name == "nu" || ax.name == "d_a") && (ax.min < 0.0 || ax.max > 1.0)) {
      throw ConfigError(ap, ax.name + " range must lie in [0,1]");
    }
    sw.axes.push_back(ax);
  }
  if (obj.contains("strategies")) {
    const auto& s = obj.at("strategies");
    if (!s.is_array() || s.empty()) throw ConfigError(path + "/strategies", "expected a nonempty array");
    sw.strategies.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string sp = path + "/strategies/" + std::to_string(i);
      sw.strategies.push_back(parse_strategy(get_string(s[i], sp), sp));
    }
  }
  if (obj.contains("max_points")) sw.max_points = get_count(obj.at("max_points"), path + "/max_points");
  return sw;
}

json sweep_json(const SweepSpec& sw) {
  json axes = json::array();
  for (const auto& a : sw.axes) {
    axes.push_back(json{{"name", a.name}, {"min", a.min}, {"max", a.max}, {"points", a.points}});
  }
  json strategies = json::array();
  for (auto s : sw.strategies) strategies.push_back(to_string(s));
  return json{{"axes", axes}, {"strategies", strategies}, {"max_points", sw.max_points}};
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
  check_keys(doc, "", {"schema_version", "units", "source", "polarization", "offset", "offsets",
                       "counts", "seed", "search", "sweep", "output"});
  ScenarioConfig c;
  if (!doc.contains("schema_version")) throw ConfigError("/schema_version", "required field missing");
  if (!doc.at("schema_version").is_number_integer() ||
      doc.at("schema_version").get<int>() != kSchemaVersion) {
    throw ConfigError("/schema_version", "unsupported schema version (expected 1)");
  }

  if (doc.contains("units")) {
    const auto& u = doc.at("units");
    check_keys(u, "/units", {"length", "time"});
    if (u.contains("length")) c.length_unit = get_string(u.at("length"), "/units/length");
    if (u.contains("time")) c.time_unit = get_string(u.at("time"), "/units/time");
  }

  if (!doc.contains("source")) throw ConfigError("/source", "required field missing");
  const auto& src = doc.at("source");
  check_keys(src, "/source", {"widths", "bandwidths"});
  if (src.contains("widths") == src.contains("bandwidths")) {
    throw ConfigError("/source", "exactly one of widths or bandwidths must be given");
  }
  if (src.contains("widths")) {
    const auto& w = src.at("widths");
    check_keys(w, "/source/widths", {"sigma_x", "sigma_y", "sigma_t"});
    c.widths = wrap_validation("/source/widths", [&] {
      return SpatialWidths::make(get_number(w, "sigma_x", "/source/widths"),
                                 get_number(w, "sigma_y", "/source/widths"),
                                 get_number(w, "sigma_t", "/source/widths"));
    });
  } else {
    const auto& b = src.at("bandwidths");
    check_keys(b, "/source/bandwidths", {"sigma_kx", "sigma_ky", "sigma_omega"});
    c.bandwidths = wrap_validation("/source/bandwidths", [&] {
      return SourceSpec::make(get_number(b, "sigma_kx", "/source/bandwidths"),
                              get_number(b, "sigma_ky", "/source/bandwidths"),
                              get_number(b, "sigma_omega", "/source/bandwidths"));
    });
  }

  if (!doc.contains("polarization")) throw ConfigError("/polarization", "required field missing");
  const auto& pol = doc.at("polarization");
  check_keys(pol, "/polarization", {"strategy", "nu", "d_a"});
  if (!pol.contains("strategy")) throw ConfigError("/polarization/strategy", "required field missing");
  c.strategy = parse_strategy(get_string(pol.at("strategy"), "/polarization/strategy"),
                              "/polarization/strategy");
  c.nu = get_number(pol, "nu", "/polarization");
  if (c.nu < 0.0 || c.nu > 1.0) throw ConfigError("/polarization/nu", "must lie in [0,1]");
  if (pol.contains("d_a")) {
    const auto& d = pol.at("d_a");
    if (d.is_string() && d.get<std::string>() == "optimal") {
      c.optimal_d_a = true;
    } else if (d.is_number()) {
      const double v = d.get<double>();
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("/polarization/d_a", "must lie in [0,1]");
      c.d_a = v;
    } else {
      throw ConfigError("/polarization/d_a", "expected a number in [0,1] or \"optimal\"");
    }
  } else if (c.strategy == Strategy::Tuned) {
    throw ConfigError("/polarization/d_a", "required for the tuned strategy");
  }

  if (doc.contains("offset")) c.offset = wrap_validation("/offset", [&] {
    return parse_offset(doc.at("offset"), "/offset");
  });
  if (doc.contains("offsets")) {
    const auto& arr = doc.at("offsets");
    if (!arr.is_array() || arr.empty()) throw ConfigError("/offsets", "expected a nonempty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.offsets.push_back(parse_offset(arr[i], "/offsets/" + std::to_string(i)));
    }
  }

  if (doc.contains("counts")) {
    const auto& cnt = doc.at("counts");
    check_keys(cnt, "/counts", {"n_pairs", "replications", "sample_sizes"});
    if (cnt.contains("n_pairs")) {
      c.n_pairs = get_count(cnt.at("n_pairs"), "/counts/n_pairs");
      if (*c.n_pairs == 0) throw ConfigError("/counts/n_pairs", "must be positive");
    }
    if (cnt.contains("replications")) {
      c.replications = get_count(cnt.at("replications"), "/counts/replications");
    }
    if (cnt.contains("sample_sizes")) {
      const auto& s = cnt.at("sample_sizes");
      if (!s.is_array() || s.empty()) throw ConfigError("/counts/sample_sizes", "expected a nonempty array");
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::string sp = "/counts/sample_sizes/" + std::to_string(i);
        const auto v = get_count(s[i], sp);
        if (v == 0) throw ConfigError(sp, "must be positive");
        c.sample_sizes.push_back(v);
      }
    }
  }

  if (doc.contains("seed")) c.seed = get_count(doc.at("seed"), "/seed");
  if (doc.contains("search")) c.search = parse_search(doc.at("search"), "/search");
  if (doc.contains("sweep")) c.sweep = parse_sweep(doc.at("sweep"), "/sweep");
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    check_keys(o, "/output", {"events", "table", "replications"});
    if (o.contains("events")) c.output.events = get_string(o.at("events"), "/output/events");
    if (o.contains("table")) c.output.table = get_string(o.at("table"), "/output/table");
    if (o.contains("replications")) {
      c.output.replications = get_string(o.at("replications"), "/output/replications");
    }
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = c.schema_version;
  if (!c.length_unit.empty() || !c.time_unit.empty()) {
    json u = json::object();
    if (!c.length_unit.empty()) u["length"] = c.length_unit;
    if (!c.time_unit.empty()) u["time"] = c.time_unit;
    doc["units"] = u;
  }
  if (c.widths) {
    doc["source"] = {{"widths",
                      {{"sigma_x", c.widths->sigma_x},
                       {"sigma_y", c.widths->sigma_y},
                       {"sigma_t", c.widths->sigma_t}}}};
  } else if (c.bandwidths) {
    doc["source"] = {{"bandwidths",
                      {{"sigma_kx", c.bandwidths->sigma_kx},
                       {"sigma_ky", c.bandwidths->sigma_ky},
                       {"sigma_omega", c.bandwidths->sigma_omega}}}};
  }
  json pol{{"strategy", to_string(c.strategy)}, {"nu", c.nu}};
  if (c.optimal_d_a) {
    pol["d_a"] = "optimal";
  } else if (c.d_a) {
    pol["d_a"] = *c.d_a;
  }
  doc["polarization"] = pol;
  doc["offset"] = offset_json(c.offset);
  if (!c.offsets.empty()) {
    json arr = json::array();
    for (const auto& o : c.offsets) arr.push_back(offset_json(o));
    doc["offsets"] = arr;
  }
  json counts = json::object();
  if (c.n_pairs) counts["n_pairs"] = *c.n_pairs;
  if (c.replications) counts["replications"] = *c.replications;
  if (!c.sample_sizes.empty()) counts["sample_sizes"] = c.sample_sizes;
  if (!counts.empty()) doc["counts"] = counts;
  doc["seed"] = c.seed;
  if (c.search) doc["search"] = search_json(*c.search);
  if (c.sweep) doc["sweep"] = sweep_json(*c.sweep);
  json out = json::object();
  if (c.output.events) out["events"] = *c.output.events;
  if (c.output.table) out["table"] = *c.output.table;
  if (c.output.replications) out["replications"] = *c.output.replications;
  if (!out.empty()) doc["output"] = out;
  return doc;
}

SourceSpec ScenarioConfig::source() const {
  if (bandwidths) return *bandwidths;
  if (widths) return widths_to_bandwidths(*widths);
  throw ConfigError("/source", "no source given");
}

double ScenarioConfig::tuned_d_a(double nu_value) const {
  if (optimal_d_a) return optimal_tuning(nu_value).d_a;
  if (d_a) return *d_a;
  throw ConfigError("/polarization/d_a", "required for the tuned strategy");
}

PolarizationSetting ScenarioConfig::polarization() const { return polarization(strategy, nu); }

PolarizationSetting ScenarioConfig::polarization(Strategy s, double nu_value) const {
  return wrap_validation("/polarization", [&] {
    return s == Strategy::Tuned ? PolarizationSetting::tuned(nu_value, tuned_d_a(nu_value))
                                : PolarizationSetting::non_tuned(nu_value);
  });
}

}  // namespace homloc::cli
