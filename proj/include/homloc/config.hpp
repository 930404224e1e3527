#pragma once

// Scenario configuration: a JSON document with a versioned schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homloc/estimator.hpp"
#include "homloc/model.hpp"

namespace homloc::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultPairs = 1000;

struct SweepAxis {
  std::string name;  // nu | d_a | dx | dy | dt
  double min = 0.0;
  double max = 0.0;
  int points = 1;

  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<SweepAxis> axes;
  std::vector<Strategy> strategies{Strategy::Tuned};
  std::uint64_t max_points = 1'000'000;
};

struct OutputPaths {
  std::optional<std::string> events;
  std::optional<std::string> table;
  std::optional<std::string> replications;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string length_unit;
  std::string time_unit;

  // Exactly one of these is set.
  std::optional<SpatialWidths> widths;
  std::optional<SourceSpec> bandwidths;

  Strategy strategy = Strategy::Tuned;
  double nu = 1.0;
  /// Unset with optimal_d_a == false only for non-tuned settings.
  std::optional<double> d_a;
  bool optimal_d_a = false;

  Offset3D offset;
  std::vector<Offset3D> offsets;

  std::optional<std::uint64_t> n_pairs;
  std::optional<std::uint64_t> replications;
  std::vector<std::uint64_t> sample_sizes;

  std::uint64_t seed = 1;

  std::optional<SearchConfig> search;
  std::optional<SweepSpec> sweep;
  OutputPaths output;

  SourceSpec source() const;
  /// Projector amplitude d_a for tuned rows at indistinguishability nu.
  double tuned_d_a(double nu_value) const;
  PolarizationSetting polarization() const;
  PolarizationSetting polarization(Strategy s, double nu_value) const;
};

/// Throws ConfigError carrying the JSON pointer of the offending field.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ScenarioConfig& c);

Strategy parse_strategy(const std::string& s, const std::string& path);

}  // namespace homloc::cli
