#pragma once

#include <string>
#include <vector>

#include "tesim/config.hpp"

namespace tesim::runner {

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 config invalid, 3 numerical failure, 4 I/O
  std::string message;
  std::vector<std::string> artifacts;  // files written, relative to out_dir
  std::string out_dir;
};

/// Resolves the output directory: override, then config, then the
/// TESIM_OUT_DIR environment variable, then "tesim_out".
std::string resolve_out_dir(const config::ScenarioConfig& cfg, const std::string& override_dir);

/// Simulates the configured number of paths and writes path CSVs plus a run
/// manifest. Per-path seeds derive from (master seed, path index), so output
/// bytes do not depend on the worker count.
RunOutcome run_simulate(const config::ScenarioConfig& cfg, const std::string& out_dir_override);

/// Runs the diagnostics appropriate to the model and writes
/// diagnostics.json: empirical-law convergence over the given levels plus the
/// coupled comparison for the market models, terminal-moment checks for the
/// linear baseline, and complementarity audits.
RunOutcome run_diagnose(const config::ScenarioConfig& cfg, const std::vector<int>& levels,
                        double reference_dt, const std::string& out_dir_override);

}  // namespace tesim::runner
