#include "tesim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tesim::config {

namespace {

using nlohmann::json;

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("missing required key '" + key + "' in " + where);
  }
  return *it;
}

agents::DemandFamily parse_demand(const json& j, const std::string& where) {
  agents::DemandFamily f;
  const std::string kind = require_key(j, "kind", where).get<std::string>();
  if (kind == "linear") {
    f.kind = agents::DemandFamily::Kind::Linear;
  } else if (kind == "saturating_slope") {
    f.kind = agents::DemandFamily::Kind::SaturatingSlope;
  } else {
    throw ConfigError("unknown demand kind '" + kind + "' in " + where);
  }
  f.k0 = require_key(j, "k0", where).get<double>();
  f.delta0 = require_key(j, "delta0", where).get<double>();
  if (f.kind == agents::DemandFamily::Kind::Linear) {
    f.alpha = j.value("alpha", f.k0);
  } else {
    f.kappa = require_key(j, "kappa", where).get<double>();
  }
  return f;
}

json demand_to_json(const agents::DemandFamily& f) {
  nlohmann::ordered_json j;
  j["kind"] = f.kind == agents::DemandFamily::Kind::Linear ? "linear" : "saturating_slope";
  if (f.kind == agents::DemandFamily::Kind::Linear) j["alpha"] = f.alpha;
  j["k0"] = f.k0;
  j["delta0"] = f.delta0;
  if (f.kind == agents::DemandFamily::Kind::SaturatingSlope) j["kappa"] = f.kappa;
  return j;
}

ScenarioConfig parse_json(const json& root) {
  ScenarioConfig cfg;
  cfg.model = scenario_model_from_string(require_key(root, "model", "config").get<std::string>());
  cfg.x0 = root.value("x0", 0.0);
  cfg.horizon = require_key(root, "horizon", "config").get<double>();
  if (root.contains("n")) {
    cfg.resolution = root["n"].get<int>();
  } else if (root.contains("dt")) {
    const double dt = root["dt"].get<double>();
    if (!(dt > 0.0)) throw ConfigError("'dt' must be positive");
    cfg.resolution = static_cast<int>(std::lround(1.0 / dt));
  } else {
    throw ConfigError("missing required key 'n' (or 'dt') in config");
  }
  cfg.paths = root.value("paths", 1);
  cfg.master_seed = root.value("master_seed", static_cast<std::uint64_t>(12345));
  cfg.workers = root.value("workers", 0);
  const std::string interp = root.value("interpolation", std::string("linear"));
  if (interp == "linear") {
    cfg.interp = Interp::Linear;
  } else if (interp == "step") {
    cfg.interp = Interp::Step;
  } else {
    throw ConfigError("unknown interpolation '" + interp + "' (expected linear or step)");
  }

  if (model_uses_agents(cfg.model)) {
    const json& agents_json = require_key(root, "agents", "config");
    if (!agents_json.is_array() || agents_json.empty()) {
      throw ConfigError("'agents' must be a non-empty array");
    }
    int idx = 0;
    for (const auto& aj : agents_json) {
      const std::string where = "agents[" + std::to_string(idx) + "]";
      agents::AgentSpec spec;
      spec.id = idx;
      const std::string group = require_key(aj, "group", where).get<std::string>();
      if (group == "constrained") {
        spec.group = agents::Group::Constrained;
      } else if (group == "unconstrained") {
        spec.group = agents::Group::Unconstrained;
      } else {
        throw ConfigError("unknown group '" + group + "' in " + where);
      }
      spec.initial_holdings = aj.value("initial_holdings", 0.0);
      spec.initial_cash = aj.value("initial_cash", 0.0);
      spec.demand = parse_demand(require_key(aj, "demand", where), where + ".demand");
      if (aj.contains("drift")) {
        spec.drift.constant = aj["drift"].value("constant", 0.0);
        spec.drift.level_coeff = aj["drift"].value("level_coeff", 0.0);
      }
      cfg.agent_specs.push_back(spec);
      ++idx;
    }
    // Constrained agents come first; stable order otherwise.
    std::stable_sort(cfg.agent_specs.begin(), cfg.agent_specs.end(),
                     [](const agents::AgentSpec& a, const agents::AgentSpec& b) {
                       return (a.group == agents::Group::Constrained) >
                              (b.group == agents::Group::Constrained);
                     });
    for (std::size_t i = 0; i < cfg.agent_specs.size(); ++i) {
      cfg.agent_specs[i].id = static_cast<int>(i);
    }

    const int n = static_cast<int>(cfg.agent_specs.size());
    const json& cov = require_key(root, "noise_cov", "config");
    cfg.noise_cov = Eigen::MatrixXd::Zero(n, n);
    if (cov.is_number()) {
      cfg.noise_cov = cov.get<double>() * Eigen::MatrixXd::Identity(n, n);
    } else if (cov.is_array() && !cov.empty() && cov[0].is_number()) {
      if (static_cast<int>(cov.size()) != n) {
        throw ConfigError("'noise_cov' diagonal must list one variance per agent");
      }
      for (int i = 0; i < n; ++i) cfg.noise_cov(i, i) = cov[static_cast<std::size_t>(i)].get<double>();
    } else if (cov.is_array()) {
      if (static_cast<int>(cov.size()) != n) {
        throw ConfigError("'noise_cov' must be an N x N matrix");
      }
      for (int i = 0; i < n; ++i) {
        const auto& row = cov[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
          throw ConfigError("'noise_cov' must be an N x N matrix");
        }
        for (int j = 0; j < n; ++j) cfg.noise_cov(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    } else {
      throw ConfigError("'noise_cov' must be a scalar, a diagonal list, or a matrix");
    }
  } else {
    const json& fs = require_key(root, "fs", "config");
    cfg.fs.beta_bar = require_key(fs, "beta_bar", "fs").get<double>();
    cfg.fs.f_bar = require_key(fs, "f_bar", "fs").get<double>();
    cfg.fs.sigma_bar = require_key(fs, "sigma_bar", "fs").get<double>();
  }

  if (root.contains("output")) {
    const json& out = root["output"];
    cfg.output.dir = out.value("dir", std::string());
    cfg.output.combined = out.value("combined", true);
    cfg.output.write_paths = out.value("write_paths", true);
  }
  return cfg;
}

}  // namespace

std::string to_string(ScenarioModel model) {
  switch (model) {
    case ScenarioModel::ModelI: return "model1";
    case ScenarioModel::ModelII: return "model2";
    case ScenarioModel::Frictionless: return "frictionless";
    case ScenarioModel::FsBaseline: return "fs_baseline";
    case ScenarioModel::SderI: return "sder1";
    case ScenarioModel::SderII: return "sder2";
  }
  return "unknown";
}

ScenarioModel scenario_model_from_string(const std::string& name) {
  if (name == "model1") return ScenarioModel::ModelI;
  if (name == "model2") return ScenarioModel::ModelII;
  if (name == "frictionless") return ScenarioModel::Frictionless;
  if (name == "fs_baseline") return ScenarioModel::FsBaseline;
  if (name == "sder1") return ScenarioModel::SderI;
  if (name == "sder2") return ScenarioModel::SderII;
  throw ConfigError("unknown model '" + name +
                    "' (expected model1, model2, frictionless, fs_baseline, sder1, sder2)");
}

bool model_uses_agents(ScenarioModel model) { return model != ScenarioModel::FsBaseline; }

agents::Model market_model(ScenarioModel model) {
  switch (model) {
    case ScenarioModel::ModelI:
    case ScenarioModel::SderI: return agents::Model::ShortSale;
    case ScenarioModel::ModelII:
    case ScenarioModel::SderII: return agents::Model::Budget;
    default: return agents::Model::Frictionless;
  }
}

agents::AgentRoster ScenarioConfig::make_roster() const {
  return agents::AgentRoster(agent_specs, noise_cov);
}

ScenarioConfig parse_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config file: " + file);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file: " + file);
  return parse_config_text(buf.str());
}

ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig cfg = parse_json(root);
  auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg, violations);
  }
  return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = to_string(cfg.model);
  j["x0"] = cfg.x0;
  j["horizon"] = cfg.horizon;
  j["n"] = cfg.resolution;
  j["paths"] = cfg.paths;
  j["master_seed"] = cfg.master_seed;
  j["workers"] = cfg.workers;
  j["interpolation"] = cfg.interp == Interp::Linear ? "linear" : "step";
  if (model_uses_agents(cfg.model)) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& a : cfg.agent_specs) {
      nlohmann::ordered_json aj;
      aj["group"] = a.group == agents::Group::Constrained ? "constrained" : "unconstrained";
      aj["initial_holdings"] = a.initial_holdings;
      aj["initial_cash"] = a.initial_cash;
      aj["demand"] = demand_to_json(a.demand);
      nlohmann::ordered_json dj;
      dj["constant"] = a.drift.constant;
      dj["level_coeff"] = a.drift.level_coeff;
      aj["drift"] = dj;
      list.push_back(aj);
    }
    j["agents"] = list;
    nlohmann::ordered_json cov = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < cfg.noise_cov.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index k = 0; k < cfg.noise_cov.cols(); ++k) row.push_back(cfg.noise_cov(i, k));
      cov.push_back(row);
    }
    j["noise_cov"] = cov;
  } else {
    nlohmann::ordered_json fs;
    fs["beta_bar"] = cfg.fs.beta_bar;
    fs["f_bar"] = cfg.fs.f_bar;
    fs["sigma_bar"] = cfg.fs.sigma_bar;
    j["fs"] = fs;
  }
  nlohmann::ordered_json out;
  out["dir"] = cfg.output.dir;
  out["combined"] = cfg.output.combined;
  out["write_paths"] = cfg.output.write_paths;
  j["output"] = out;
  return j.dump(2);
}

std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
  std::vector<std::string> violations;
  if (!(cfg.horizon > 0.0)) violations.push_back("horizon must be positive");
  if (cfg.resolution < 1) violations.push_back("resolution n must be at least 1");
  if (cfg.paths < 1) violations.push_back("paths must be at least 1");
  if (cfg.workers < 0) violations.push_back("workers must be nonnegative");

  if (model_uses_agents(cfg.model)) {
    const int n = static_cast<int>(cfg.agent_specs.size());
    if (n < 2) violations.push_back("at least two agents are required");
    int n1 = 0;
    for (const auto& a : cfg.agent_specs) {
      if (a.group == agents::Group::Constrained) ++n1;
    }
    if (n >= 2 && n1 >= n) {
      violations.push_back(
          "every agent is constrained (N1 = N): the coupling envelope has unit column sums, "
          "so no admissible dominating matrix with spectral radius below one exists; at "
          "least one unconstrained agent is required");
    }
    if (cfg.noise_cov.rows() != n || cfg.noise_cov.cols() != n) {
      violations.push_back("noise covariance must be N x N");
    } else if (n >= 2 && n1 < n) {
      try {
        const auto report = agents::validate_agent_set(cfg.make_roster());
        violations.insert(violations.end(), report.violations.begin(),
                          report.violations.end());
      } catch (const std::exception& e) {
        violations.push_back(e.what());
      }
    } else if (n >= 2) {
      // N1 = N already reported; still surface per-agent violations.
      for (std::size_t i = 0; i < cfg.agent_specs.size(); ++i) {
        try {
          cfg.agent_specs[i].demand.validate();
        } catch (const std::exception& e) {
          violations.push_back("agent " + std::to_string(i) + ": " + e.what());
        }
      }
    }
  } else {
    if (cfg.fs.sigma_bar < 0.0) violations.push_back("fs.sigma_bar must be nonnegative");
  }
  return violations;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) { return fnv1a64(serialize_config(cfg)); }

}  // namespace tesim::config
