#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "homloc/config.hpp"

namespace homloc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitIo = 4,
};

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> events;
  int threads = 1;
  bool override_digest = false;
};

/// Each command writes its table to `out` (or to options.out when set) and
/// notices to `err`. Failures are reported by exception; the return value is
/// the process exit code for completed runs.
int cmd_fisher(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_scan(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_estimate(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_experiment(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_compare(const ScenarioConfig& c, const CommandOptions& o, std::ostream& out, std::ostream& err);

/// Loads the config, runs `command`, and maps exceptions to exit codes.
int dispatch(const std::string& command, const std::filesystem::path& config_path,
             const CommandOptions& options, std::ostream& out, std::ostream& err);

/// "%.17g", with inf/nan spelled out.
std::string format_real(double v);

}  // namespace homloc::cli
