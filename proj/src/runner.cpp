#include "tesim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "tesim/analysis.hpp"
#include "tesim/parallel.hpp"
#include "tesim/rng.hpp"
#include "tesim/sder.hpp"
#include "tesim/version.hpp"

namespace tesim::runner {

namespace fs = std::filesystem;

namespace {

using config::ScenarioConfig;
using config::ScenarioModel;

PathGrid simulate_one(const ScenarioConfig& cfg, const agents::AgentRoster* roster,
                      long path_index) {
  const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(path_index));
  switch (cfg.model) {
    case ScenarioModel::ModelI:
    case ScenarioModel::ModelII:
    case ScenarioModel::Frictionless:
      return clearing::simulate_discrete_path(*roster, cfg.x0, cfg.horizon, cfg.resolution,
                                              config::market_model(cfg.model), seed, cfg.interp);
    case ScenarioModel::FsBaseline:
      return clearing::simulate_fs_path(cfg.fs, cfg.x0, cfg.horizon, cfg.resolution, seed);
    case ScenarioModel::SderI:
    case ScenarioModel::SderII: {
      const long steps = std::lround(cfg.horizon * cfg.resolution);
      const auto panel =
          sder::BrownianPanel::make(steps, roster->size(), 1.0 / cfg.resolution, seed);
      return sder::simulate_sder(*roster, cfg.x0, panel, config::market_model(cfg.model));
    }
  }
  throw std::logic_error("simulate_one: unhandled model");
}

void write_manifest(const ScenarioConfig& cfg, const std::string& out_dir,
                    const std::vector<std::string>& artifacts) {
  nlohmann::ordered_json j;
  j["tool"] = "tesim";
  j["version"] = kVersion;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(config::config_hash(cfg)));
  j["config_hash"] = hex;
  j["master_seed"] = cfg.master_seed;
  j["model"] = config::to_string(cfg.model);
  j["paths"] = cfg.paths;
  j["n"] = cfg.resolution;
  j["horizon"] = cfg.horizon;
  j["path_seed_rule"] = "derive_seed(master_seed, path_index)";
  j["artifacts"] = artifacts;
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw config::IoError("cannot write manifest in " + out_dir);
  out << j.dump(2) << '\n';
}

}  // namespace

std::string resolve_out_dir(const ScenarioConfig& cfg, const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (!cfg.output.dir.empty()) return cfg.output.dir;
  if (const char* env = std::getenv("TESIM_OUT_DIR"); env && *env) return env;
  return "tesim_out";
}

RunOutcome run_simulate(const ScenarioConfig& cfg, const std::string& out_dir_override) {
  RunOutcome outcome;
  outcome.out_dir = resolve_out_dir(cfg, out_dir_override);
  std::error_code ec;
  fs::create_directories(outcome.out_dir, ec);
  if (ec) {
    outcome.exit_code = 4;
    outcome.message = "cannot create output directory " + outcome.out_dir + ": " + ec.message();
    return outcome;
  }

  std::optional<agents::AgentRoster> roster;
  if (config::model_uses_agents(cfg.model)) roster.emplace(cfg.make_roster());

  try {
    if (cfg.output.write_paths) {
      // Compute in parallel chunks, write strictly in path order.
      const int chunk = std::max(1, resolve_workers(cfg.workers));
      std::ofstream combined;
      if (cfg.output.combined) {
        combined.open(fs::path(outcome.out_dir) / "paths.csv");
        if (!combined) throw config::IoError("cannot write paths.csv");
        outcome.artifacts.push_back("paths.csv");
      }
      std::vector<PathGrid> buffer(static_cast<std::size_t>(chunk));
      for (long base = 0; base < cfg.paths; base += chunk) {
        const long count = std::min<long>(chunk, cfg.paths - base);
        parallel_for_index(count, cfg.workers, [&](long i) {
          buffer[static_cast<std::size_t>(i)] =
              simulate_one(cfg, roster ? &*roster : nullptr, base + i);
        });
        for (long i = 0; i < count; ++i) {
          const PathGrid& g = buffer[static_cast<std::size_t>(i)];
          if (cfg.output.combined) {
            if (base + i == 0) g.write_csv_header(combined, true);
            g.write_csv_rows(combined, base + i, true);
          } else {
            char name[32];
            std::snprintf(name, sizeof(name), "path_%06ld.csv", base + i);
            std::ofstream out(fs::path(outcome.out_dir) / name);
            if (!out) throw config::IoError(std::string("cannot write ") + name);
            g.write_csv(out);
            outcome.artifacts.push_back(name);
          }
        }
      }
    }
    write_manifest(cfg, outcome.out_dir, outcome.artifacts);
    outcome.artifacts.push_back("manifest.json");
    outcome.message = "wrote " + std::to_string(cfg.paths) + " path(s) to " + outcome.out_dir;
  } catch (const config::IoError& e) {
    outcome.exit_code = 4;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 3;
    outcome.message = std::string("numerical failure: ") + e.what();
  }
  return outcome;
}

RunOutcome run_diagnose(const ScenarioConfig& cfg, const std::vector<int>& levels,
                        double reference_dt, const std::string& out_dir_override) {
  RunOutcome outcome;
  outcome.out_dir = resolve_out_dir(cfg, out_dir_override);
  std::error_code ec;
  fs::create_directories(outcome.out_dir, ec);
  if (ec) {
    outcome.exit_code = 4;
    outcome.message = "cannot create output directory " + outcome.out_dir + ": " + ec.message();
    return outcome;
  }

  analysis::DiagnosticsReport report;
  report.model = config::to_string(cfg.model);
  report.paths = cfg.paths;
  report.master_seed = cfg.master_seed;

  try {
    if (cfg.model == ScenarioModel::FsBaseline) {
      report.ou_moments = analysis::ou_moment_check(cfg.fs, cfg.x0, cfg.horizon, cfg.resolution,
                                                    cfg.paths, cfg.master_seed, cfg.workers);
    } else {
      const agents::AgentRoster roster = cfg.make_roster();
      const agents::Model model = config::market_model(cfg.model);
      if (model != agents::Model::Frictionless) {
        if (!levels.empty()) {
          report.weak_convergence = analysis::weak_convergence_diagnostic(
              roster, cfg.x0, cfg.horizon, model, levels, cfg.paths, reference_dt,
              cfg.master_seed, cfg.workers);
        }
        report.comparison =
            analysis::comparison_check(roster, cfg.x0, cfg.horizon, 1.0 / cfg.resolution, model,
                                       cfg.paths, cfg.master_seed, cfg.workers);

        // Complementarity audit over a small pinned sample of paths.
        const int audit_paths = std::min(cfg.paths, 25);
        double worst_discrete = 0.0, worst_sder = 0.0;
        for (int p = 0; p < audit_paths; ++p) {
          const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(p));
          const PathGrid d = clearing::simulate_discrete_path(
              roster, cfg.x0, cfg.horizon, cfg.resolution, model, seed, cfg.interp);
          worst_discrete = std::max(worst_discrete, analysis::complementarity_audit(d));
          const long steps = std::lround(cfg.horizon * cfg.resolution);
          const auto panel =
              sder::BrownianPanel::make(steps, roster.size(), 1.0 / cfg.resolution, seed);
          const PathGrid s = sder::simulate_sder(roster, cfg.x0, panel, model);
          worst_sder = std::max(worst_sder, analysis::complementarity_audit(s));
        }
        report.complementarity_discrete = worst_discrete;
        report.complementarity_sder = worst_sder;
      }
    }
    const fs::path file = fs::path(outcome.out_dir) / "diagnostics.json";
    std::ofstream out(file);
    if (!out) throw config::IoError("cannot write diagnostics.json");
    out << report.to_json_string() << '\n';
    outcome.artifacts.push_back("diagnostics.json");
    write_manifest(cfg, outcome.out_dir, outcome.artifacts);
    outcome.artifacts.push_back("manifest.json");
    outcome.message = "wrote diagnostics to " + outcome.out_dir;
  } catch (const config::IoError& e) {
    outcome.exit_code = 4;
    outcome.message = e.what();
  } catch (const std::invalid_argument& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 3;
    outcome.message = std::string("numerical failure: ") + e.what();
  }
  return outcome;
}

}  // namespace tesim::runner
