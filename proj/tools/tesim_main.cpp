#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "tesim/analysis.hpp"
#include "tesim/config.hpp"
#include "tesim/runner.hpp"
#include "tesim/skorokhod.hpp"
#include "tesim/version.hpp"

namespace {

using tesim::config::ConfigError;
using tesim::config::IoError;

std::vector<int> parse_levels(const std::string& csv) {
  std::vector<int> levels;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) levels.push_back(std::stoi(tok));
  }
  return levels;
}

Eigen::MatrixXd read_csv_matrix(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && rows.empty()) continue;  // header line
    if (!numeric) throw ConfigError("non-numeric cell in " + file);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("ragged rows in " + file);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("no data rows in " + file);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

int cmd_skorokhod(const std::string& input, const std::string& q_file,
                  const std::string& out_file) {
  const Eigen::MatrixXd y = read_csv_matrix(input);
  const Eigen::Index n1 = y.cols();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n1, n1);
  if (!q_file.empty()) {
    q = read_csv_matrix(q_file);
    if (q.rows() != n1 || q.cols() != n1) {
      throw ConfigError("coupling matrix must be N1 x N1 to match the input columns");
    }
  }
  const auto spec = tesim::skorokhod::ReflectionSpec::constant(
      q, static_cast<std::size_t>(y.rows() > 0 ? y.rows() - 1 : 0));
  const auto sol = tesim::skorokhod::solve_discrete_skorokhod_oblique(y, spec);
  std::ofstream out(out_file);
  if (!out) throw IoError("cannot write " + out_file);
  for (Eigen::Index k = 0; k < sol.regulator.rows(); ++k) {
    for (Eigen::Index i = 0; i < sol.regulator.cols(); ++i) {
      if (i) out << ',';
      out << tesim::format_float(sol.regulator(k, i));
    }
    out << '\n';
  }
  std::cout << "wrote regulator (" << sol.regulator.rows() << " x " << sol.regulator.cols()
            << ") to " << out_file << " after " << sol.iterations << " sweeps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tesim: constrained agent-based market simulator and diagnostics"};
  app.set_version_flag("--version", tesim::kVersion);
  app.require_subcommand(1);

  std::string config_file, out_dir, levels_csv = "16,64,256";
  std::string sk_input, sk_q, sk_out = "L.csv";
  int override_paths = 0, override_workers = -1;
  std::uint64_t override_seed = 0;
  bool has_seed = false;
  double reference_dt = 1.0 / 4096.0;

  auto* simulate = app.add_subcommand("simulate", "simulate paths and write CSV artifacts");
  simulate->add_option("--config", config_file, "scenario config (JSON)")->required();
  simulate->add_option("--paths", override_paths, "override the configured path count");
  simulate->add_option("--seed", override_seed, "override the master seed");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--workers", override_workers, "worker threads (0 = all cores)");

  auto* diagnose = app.add_subcommand("diagnose", "run statistical diagnostics");
  diagnose->add_option("--config", config_file, "scenario config (JSON)")->required();
  diagnose->add_option("--levels", levels_csv, "comma-separated grid resolutions");
  diagnose->add_option("--ref-dt", reference_dt, "reference integrator step");
  diagnose->add_option("--paths", override_paths, "override the configured path count");
  diagnose->add_option("--out", out_dir, "output directory");
  diagnose->add_option("--workers", override_workers, "worker threads (0 = all cores)");

  auto* validate = app.add_subcommand("validate", "validate a scenario config");
  validate->add_option("--config", config_file, "scenario config (JSON)")->required();

  auto* skorokhod = app.add_subcommand("skorokhod", "solve a discrete reflection problem");
  skorokhod->add_option("--input", sk_input, "CSV of input paths, one column per component")
      ->required();
  skorokhod->add_option("--q", sk_q, "CSV of the constant coupling matrix (default: zero)");
  skorokhod->add_option("--out", sk_out, "output CSV for the regulator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(skorokhod)) {
      return cmd_skorokhod(sk_input, sk_q, sk_out);
    }
    tesim::config::ScenarioConfig cfg = tesim::config::parse_config(config_file);
    if (override_paths > 0) cfg.paths = override_paths;
    if (override_workers >= 0) cfg.workers = override_workers;
    has_seed = app.got_subcommand(simulate) && simulate->count("--seed") > 0;
    if (has_seed) cfg.master_seed = override_seed;

    if (app.got_subcommand(validate)) {
      std::cout << "config ok: model=" << tesim::config::to_string(cfg.model)
                << " paths=" << cfg.paths << " n=" << cfg.resolution;
      if (tesim::config::model_uses_agents(cfg.model)) {
        const auto report = tesim::agents::validate_agent_set(cfg.make_roster());
        std::cout << " envelope_radius=" << report.envelope_radius;
      }
      std::cout << '\n';
      return 0;
    }
    tesim::runner::RunOutcome outcome;
    if (app.got_subcommand(simulate)) {
      outcome = tesim::runner::run_simulate(cfg, out_dir);
    } else {
      outcome = tesim::runner::run_diagnose(cfg, parse_levels(levels_csv), reference_dt, out_dir);
    }
    std::cout << outcome.message << '\n';
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
