#include "tesim/agents.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "tesim/skorokhod.hpp"

namespace tesim::agents {

double DemandFamily::value(double x, double ref) const {
  const double d = x - ref;
  if (kind == Kind::Linear) return -alpha * d;
  const double spread = k0 - delta0;
  return -delta0 * d - (spread / kappa) * std::tanh(kappa * d);
}

double DemandFamily::slope(double x, double ref) const {
  if (kind == Kind::Linear) return -alpha;
  const double c = std::cosh(kappa * (x - ref));
  return -delta0 - (k0 - delta0) / (c * c);
}

double DemandFamily::curvature(double x, double ref) const {
  if (kind == Kind::Linear) return 0.0;
  const double u = kappa * (x - ref);
  const double c = std::cosh(u);
  return 2.0 * kappa * (k0 - delta0) * std::tanh(u) / (c * c);
}

double DemandFamily::alpha_at_ref() const {
  return kind == Kind::Linear ? alpha : k0;
}

void DemandFamily::validate() const {
  if (!(delta0 > 0.0)) {
    throw std::invalid_argument("demand family: lower slope bound delta0 must be positive");
  }
  if (!(k0 >= delta0)) {
    throw std::invalid_argument("demand family: slope bounds must satisfy delta0 <= k0");
  }
  if (kind == Kind::Linear) {
    if (!(alpha >= delta0 && alpha <= k0)) {
      throw std::invalid_argument("demand family: linear slope must lie in [delta0, k0]");
    }
  } else {
    if (!(kappa > 0.0)) {
      throw std::invalid_argument("demand family: curvature scale kappa must be positive");
    }
  }
}

Eigen::MatrixXd lower_cholesky_psd(const Eigen::MatrixXd& a, double pivot_tol) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("lower_cholesky_psd: matrix must be square");
  }
  const Eigen::Index n = a.rows();
  const double scale = n > 0 ? std::max(1e-300, a.cwiseAbs().maxCoeff()) : 1.0;
  if (n > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("lower_cholesky_psd: matrix must be symmetric");
  }
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d > pivot_tol * scale) {
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double s = a(i, j);
        for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    } else if (d >= -pivot_tol * scale) {
      // semidefinite direction: column stays zero
    } else {
      throw std::invalid_argument("lower_cholesky_psd: matrix is not positive semidefinite");
    }
  }
  // Repair by eigenvalue clipping is rejected: the factor must reproduce the
  // input, otherwise the configuration itself is wrong.
  if (n > 0 && (l * l.transpose() - a).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale)) {
    throw std::invalid_argument(
        "lower_cholesky_psd: factor does not reproduce the matrix (input not PSD)");
  }
  return l;
}

CoefficientSet make_coefficient_set(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& gamma, const Eigen::MatrixXd& a,
                                    int n_constrained, const Eigen::MatrixXd* sigma) {
  const Eigen::Index n = alpha.size();
  if (beta.size() != n || gamma.size() != n || a.rows() != n || a.cols() != n) {
    throw std::invalid_argument("make_coefficient_set: dimension mismatch");
  }
  if (n_constrained < 0 || n_constrained > n) {
    throw std::invalid_argument("make_coefficient_set: bad constrained count");
  }
  CoefficientSet c;
  c.alpha = alpha;
  c.beta = beta;
  c.gamma = gamma;
  c.a = a;
  c.sigma = sigma ? *sigma : lower_cholesky_psd(a);
  c.alpha_bar = alpha.sum();

  c.alpha_tilde.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double rest = c.alpha_bar - alpha(j);
    if (!(rest > 0.0)) {
      throw std::runtime_error(
          "make_coefficient_set: alpha_bar - alpha_j must be positive (needs N >= 2 agents "
          "with positive impact weights)");
    }
    c.alpha_tilde(j) = 1.0 / rest;
  }

  c.q = Eigen::MatrixXd::Zero(n, n_constrained);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n_constrained; ++j) {
      if (i != j) c.q(i, j) = alpha(i) * c.alpha_tilde(j);
    }
  }

  const double total_cov = n > 0 ? a.sum() : 0.0;
  c.gamma_tilde = gamma * (total_cov / (2.0 * c.alpha_bar * c.alpha_bar));
  c.beta_tilde = beta + c.gamma_tilde;
  return c;
}

AgentRoster::AgentRoster(std::vector<AgentSpec> agents, Eigen::MatrixXd noise_cov)
    : agents_(std::move(agents)), noise_cov_(std::move(noise_cov)) {
  const int n = static_cast<int>(agents_.size());
  if (noise_cov_.rows() != n || noise_cov_.cols() != n) {
    throw std::invalid_argument("AgentRoster: covariance must be N x N");
  }
  bool seen_unconstrained = false;
  for (int i = 0; i < n; ++i) {
    agents_[static_cast<std::size_t>(i)].id = i;
    if (agents_[static_cast<std::size_t>(i)].group == Group::Constrained) {
      if (seen_unconstrained) {
        throw std::invalid_argument("AgentRoster: constrained agents must come first");
      }
      ++n_constrained_;
    } else {
      seen_unconstrained = true;
    }
  }
  try {
    noise_factor_ = lower_cholesky_psd(noise_cov_);
  } catch (const std::exception& e) {
    cov_error_ = e.what();
  }
}

const Eigen::MatrixXd& AgentRoster::noise_factor() const {
  if (!cov_error_.empty()) {
    throw std::invalid_argument("AgentRoster: " + cov_error_);
  }
  return noise_factor_;
}

Eigen::VectorXd AgentRoster::initial_holdings() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = agent(i).initial_holdings;
  return v;
}

Eigen::VectorXd AgentRoster::initial_cash() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = agent(i).initial_cash;
  return v;
}

bool AgentRoster::constant_coefficients() const {
  for (const auto& a : agents_) {
    if (a.drift.level_coeff != 0.0) return false;
  }
  return true;
}

double eval_demand_no_friction(const AgentSpec& agent, double x, const GridPath& history,
                               int step, const NoiseDraw& noise, int resolution) {
  if (resolution < 1) {
    throw std::invalid_argument("eval_demand_no_friction: resolution must be >= 1");
  }
  if (step < 0) throw std::out_of_range("eval_demand_no_friction: negative step");
  const double ref = history.at_step(static_cast<std::size_t>(step));
  const double f = agent.demand.value(x, ref);
  return f + noise.gbar(agent.id) / resolution +
         noise.gtilde(agent.id) / std::sqrt(static_cast<double>(resolution));
}

double apply_constraint(const AgentSpec& agent, double demand, double holdings_or_cash,
                        Model model) {
  if (model == Model::Frictionless || agent.group == Group::Unconstrained) return demand;
  if (model == Model::ShortSale) return std::max(demand, -holdings_or_cash);
  return std::min(demand, holdings_or_cash);
}

NoiseDraw sample_noise(const AgentRoster& roster, double current_level, Rng& rng) {
  const int n = roster.size();
  const Eigen::MatrixXd& factor = roster.noise_factor();
  NoiseDraw draw;
  draw.gbar.resize(n);
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi(i) = rng.clipped_normal(8.0);
  draw.gtilde = factor * xi;
  for (int i = 0; i < n; ++i) draw.gbar(i) = roster.agent(i).drift.eval(current_level);
  return draw;
}

CoefficientSet coefficients_at(const AgentRoster& roster, double t, const GridPath& path) {
  const double level = path.at(t);
  const int n = roster.size();
  Eigen::VectorXd alpha(n), beta(n), gamma(n);
  for (int i = 0; i < n; ++i) {
    const AgentSpec& ag = roster.agent(i);
    alpha(i) = ag.demand.alpha_at_ref();
    beta(i) = ag.drift.eval(level);
    gamma(i) = ag.demand.curvature(level, level);
  }
  const Eigen::MatrixXd& factor = roster.noise_factor();
  return make_coefficient_set(alpha, beta, gamma, roster.noise_cov(), roster.n_constrained(),
                              &factor);
}

Eigen::MatrixXd reflection_envelope(const AgentRoster& roster) {
  const int n1 = roster.n_constrained();
  double delta_total = 0.0;
  for (int i = 0; i < roster.size(); ++i) delta_total += roster.agent(i).demand.delta0;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n1, n1);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n1; ++j) {
      if (i == j) continue;
      const double rest = delta_total - roster.agent(j).demand.delta0;
      v(i, j) = roster.agent(i).demand.k0 / rest;
    }
  }
  return v;
}

ValidationReport validate_agent_set(const AgentRoster& roster) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };

  const int n = roster.size();
  if (n == 0) {
    fail("roster is empty");
    return report;
  }
  if (n < 2) {
    fail("at least two agents are required for a well-posed clearing equation");
  }
  bool slopes_ok = true;
  for (int i = 0; i < n; ++i) {
    const AgentSpec& ag = roster.agent(i);
    try {
      ag.demand.validate();
    } catch (const std::exception& e) {
      slopes_ok = false;
      std::ostringstream os;
      os << "agent " << i << ": " << e.what();
      fail(os.str());
    }
    if (ag.initial_holdings < 0.0) {
      std::ostringstream os;
      os << "agent " << i << ": initial holdings must be nonnegative";
      fail(os.str());
    }
    if (ag.initial_cash < 0.0) {
      std::ostringstream os;
      os << "agent " << i << ": initial cash must be nonnegative";
      fail(os.str());
    }
  }
  if (!roster.covariance_ok()) {
    fail("noise covariance: " + roster.covariance_error());
  }
  if (roster.n_constrained() == n && n > 0) {
    fail("every agent is constrained (N1 = N): the coupling envelope has unit column sums, "
         "its spectral radius is at least one, and the reflection problem is not contractive");
  }
  if (slopes_ok && roster.n_constrained() > 0) {
    const Eigen::MatrixXd v = reflection_envelope(roster);
    const auto rho = skorokhod::spectral_radius(v);
    report.envelope_radius = rho.value;
    report.radius_converged = rho.converged;
    if (!(rho.value < 1.0) && roster.n_constrained() < n) {
      std::ostringstream os;
      os << "reflection envelope spectral radius " << rho.value << " is not below one";
      fail(os.str());
    }
  }
  return report;
}

}  // namespace tesim::agents
