// homloc: Fisher information, simulation and estimation for HOM-based
// photon-pair localization.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "homloc/commands.hpp"
#include "homloc/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"HOM photon-pair localization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string events_path;
  int threads = 0;
  bool override_digest = false;

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"fisher", "Closed-form and quadrature Fisher information with Cramer-Rao bounds"},
      {"scan", "Fisher-information sweep over nu, d_a and offsets (CSV)"},
      {"simulate", "Generate a seeded event file"},
      {"estimate", "Maximum-likelihood fit of an event file"},
      {"experiment", "Replicated MLE runs against the Cramer-Rao bound"},
      {"compare", "Tuned vs non-tuned strategy side by side"},
  };
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "Scenario JSON")->required();
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--out", out_path, "Output path");
    sub->add_option("--threads", threads, "Worker threads (speed only)");
    sub->add_flag("--override-digest", override_digest, "Fit events from a different scenario");
    if (std::string(s.name) == "estimate") {
      sub->add_option("--events", events_path, "Event file (defaults to output.events)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : homloc::cli::kExitConfig;
  }

  homloc::cli::CommandOptions options;
  if (app.get_subcommands().front()->count("--seed") > 0) options.seed = seed;
  if (!out_path.empty()) options.out = out_path;
  if (!events_path.empty()) options.events = events_path;
  options.threads = homloc::resolve_threads(threads);
  options.override_digest = override_digest;

  return homloc::cli::dispatch(app.get_subcommands().front()->get_name(), config_path, options,
                               std::cout, std::cerr);
}
