#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tesim/agents.hpp"
#include "tesim/clearing.hpp"

namespace tesim::config {

/// Raised for unreadable/unwritable files (CLI exit code 4).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or invalid scenario configs (CLI exit code 2).
/// Carries the individual violations when validation fails.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg, std::vector<std::string> details = {})
      : std::runtime_error(msg), violations(std::move(details)) {}
  std::vector<std::string> violations;
};

enum class ScenarioModel { ModelI, ModelII, Frictionless, FsBaseline, SderI, SderII };

std::string to_string(ScenarioModel model);
ScenarioModel scenario_model_from_string(const std::string& name);

/// True for the models driven by an agent roster (everything but the
/// linear-demand baseline).
bool model_uses_agents(ScenarioModel model);
agents::Model market_model(ScenarioModel model);  // discrete/limit dynamics flavor

struct OutputOptions {
  std::string dir;        // empty: TESIM_OUT_DIR env var, then "tesim_out"
  bool combined = true;   // one long-format CSV vs one file per path
  bool write_paths = true;
};

struct ScenarioConfig {
  ScenarioModel model = ScenarioModel::Frictionless;
  double x0 = 0.0;
  double horizon = 1.0;
  int resolution = 256;  // grid steps per unit time (accepts "dt" in files)
  int paths = 1;
  std::uint64_t master_seed = 12345;
  int workers = 0;  // 0 = all hardware threads
  Interp interp = Interp::Linear;
  std::vector<agents::AgentSpec> agent_specs;
  Eigen::MatrixXd noise_cov;
  clearing::FsParams fs;
  OutputOptions output;

  agents::AgentRoster make_roster() const;
};

/// Parses a JSON scenario file. Missing required keys raise ConfigError
/// naming the key; the parsed config is then validated and rejected with the
/// full violation list if anything fails. Unreadable files raise IoError.
ScenarioConfig parse_config(const std::string& file);

/// Same, from an in-memory JSON document (string form).
ScenarioConfig parse_config_text(const std::string& text);

/// Canonical JSON rendering; parse(serialize(c)) reproduces c.
std::string serialize_config(const ScenarioConfig& cfg);

/// All violations, empty when the config is admissible.
std::vector<std::string> validate_config(const ScenarioConfig& cfg);

/// FNV-1a of the canonical serialization.
std::uint64_t config_hash(const ScenarioConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace tesim::config
