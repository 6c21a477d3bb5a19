#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tesim/grid_path.hpp"
#include "tesim/rng.hpp"

namespace tesim::agents {

enum class Group { Constrained, Unconstrained };

enum class Model { ShortSale, Budget, Frictionless };

/// Price-sensitive part of an agent's excess demand. Both families vanish at
/// the reference price and have slope within [-k0, -delta0] everywhere.
struct DemandFamily {
  enum class Kind { Linear, SaturatingSlope };

  Kind kind = Kind::Linear;
  double alpha = 1.0;   // Linear: slope magnitude (delta0 <= alpha <= k0)
  double k0 = 1.0;      // upper slope bound
  double delta0 = 1.0;  // lower slope bound
  double kappa = 1.0;   // SaturatingSlope: curvature scale

  double value(double x, double ref) const;
  double slope(double x, double ref) const;
  double curvature(double x, double ref) const;

  /// Magnitude of the slope at x == ref (the per-period price impact weight).
  double alpha_at_ref() const;

  void validate() const;  // throws std::invalid_argument
};

/// Deterministic component of the liquidity demand, affine in the current
/// log-price level.
struct DriftDemand {
  double constant = 0.0;
  double level_coeff = 0.0;

  double eval(double level) const { return constant + level_coeff * level; }
};

struct AgentSpec {
  int id = 0;  // 0-based roster index
  Group group = Group::Unconstrained;
  double initial_holdings = 0.0;  // shares, short-sale model
  double initial_cash = 0.0;      // dollars, budget model
  DemandFamily demand;
  DriftDemand drift;
};

/// One period's realized liquidity demand: gbar enters at order 1/n, gtilde
/// (mean zero, covariance matching the roster) at order 1/sqrt(n).
struct NoiseDraw {
  Eigen::VectorXd gbar;
  Eigen::VectorXd gtilde;
};

/// Limit coefficients at a fixed (time, path) point together with the
/// quantities derived from them.
struct CoefficientSet {
  Eigen::VectorXd alpha;   // per-agent price-impact weights, in [delta0, k0]
  Eigen::VectorXd beta;    // mean liquidity demand rates
  Eigen::VectorXd gamma;   // demand curvature at the current price
  Eigen::MatrixXd a;       // noise covariance, N x N
  Eigen::MatrixXd sigma;   // lower-triangular factor, sigma sigma^T = a
  double alpha_bar = 0.0;  // sum of alpha
  Eigen::VectorXd alpha_tilde;  // 1 / (alpha_bar - alpha_j)
  Eigen::MatrixXd q;            // N x N1 coupling, q_ij = (1 - delta_ij) alpha_i alpha_tilde_j
  Eigen::VectorXd beta_tilde;   // beta + gamma_tilde
  Eigen::VectorXd gamma_tilde;  // gamma / (2 alpha_bar^2) * sum_kl a_kl

  int size() const { return static_cast<int>(alpha.size()); }
  int n_constrained() const { return static_cast<int>(q.cols()); }
};

/// Builds the derived quantities from raw (alpha, beta, gamma, a). When
/// sigma is not supplied it is computed by the tolerant lower-triangular
/// factorization below. Throws std::invalid_argument when a is not
/// symmetric positive semidefinite and std::runtime_error when
/// alpha_bar - alpha_j fails to be positive.
CoefficientSet make_coefficient_set(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& gamma, const Eigen::MatrixXd& a,
                                    int n_constrained,
                                    const Eigen::MatrixXd* sigma = nullptr);

/// Lower-triangular factor L with L L^T = a for symmetric positive
/// semidefinite a. Pivots below pivot_tol (relative to the largest diagonal
/// entry) zero out the column; an indefinite input is rejected rather than
/// repaired, and the factor is verified to reproduce a to 1e-10.
Eigen::MatrixXd lower_cholesky_psd(const Eigen::MatrixXd& a, double pivot_tol = 1e-12);

/// Immutable agent roster. Constrained agents must form a prefix of the
/// list; ids are re-assigned to roster order.
class AgentRoster {
 public:
  AgentRoster(std::vector<AgentSpec> agents, Eigen::MatrixXd noise_cov);

  int size() const { return static_cast<int>(agents_.size()); }
  int n_constrained() const { return n_constrained_; }
  const AgentSpec& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const Eigen::MatrixXd& noise_cov() const { return noise_cov_; }

  /// Throws std::invalid_argument when the covariance is not factorizable.
  const Eigen::MatrixXd& noise_factor() const;
  bool covariance_ok() const { return cov_error_.empty(); }
  const std::string& covariance_error() const { return cov_error_; }

  Eigen::VectorXd initial_holdings() const;
  Eigen::VectorXd initial_cash() const;

  /// True when every coefficient is independent of the path level (no agent
  /// has a level-dependent drift).
  bool constant_coefficients() const;

 private:
  std::vector<AgentSpec> agents_;
  Eigen::MatrixXd noise_cov_;
  Eigen::MatrixXd noise_factor_;
  std::string cov_error_;
  int n_constrained_ = 0;
};

/// Excess demand of one agent before friction at proposed log-price x:
/// the price-sensitive part around the current price w(k/n) plus the
/// liquidity terms gbar/n + gtilde/sqrt(n).
double eval_demand_no_friction(const AgentSpec& agent, double x, const GridPath& history,
                               int step, const NoiseDraw& noise, int resolution);

/// Clamps the pre-friction demand for constrained agents: a short-sale floor
/// at -holdings (shares) or a budget cap at cash (dollars). Unconstrained
/// agents and the frictionless model pass the demand through.
double apply_constraint(const AgentSpec& agent, double demand, double holdings_or_cash,
                        Model model);

/// One period's noise draw: deterministic gbar from each agent's drift at the
/// current level, and correlated mean-zero gtilde built from standard normals
/// clamped at +-8 through the covariance factor.
NoiseDraw sample_noise(const AgentRoster& roster, double current_level, Rng& rng);

/// Limit coefficients at (t, path).
CoefficientSet coefficients_at(const AgentRoster& roster, double t, const GridPath& path);

/// Worst-case bound on the coupling matrix over admissible coefficients:
/// V_ij = k0_i / sum_{l != j} delta0_l off the diagonal (n1 x n1).
Eigen::MatrixXd reflection_envelope(const AgentRoster& roster);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  double envelope_radius = 0.0;
  bool radius_converged = true;
};

/// Checks the standing assumptions that are decidable from the roster alone:
/// slope bounds, nonnegative endowments, factorizable covariance, at least
/// one unconstrained agent, and a contractive reflection envelope.
ValidationReport validate_agent_set(const AgentRoster& roster);

}  // namespace tesim::agents
