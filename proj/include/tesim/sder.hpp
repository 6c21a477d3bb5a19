#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tesim/agents.hpp"
#include "tesim/path_grid.hpp"

namespace tesim::sder {

using agents::AgentRoster;
using agents::CoefficientSet;
using agents::Model;

/// Pre-drawn Brownian increments: one row per step, one column per driving
/// dimension, each entry N(0, dt). Reproducible from the seed.
struct BrownianPanel {
  double dt = 0.0;
  Eigen::MatrixXd increments;
  std::uint64_t seed = 0;

  static BrownianPanel make(long steps, int dims, double dt, std::uint64_t seed);

  /// Sums consecutive groups of `factor` rows: the same Brownian path viewed
  /// on a grid `factor` times coarser.
  BrownianPanel coarsen(int factor) const;
};

/// Drift vector (1+N) and diffusion matrix (1+N) x N of the limit dynamics:
/// row 0 drives the log-price, rows 1..N the positions. Under the budget
/// model the position rows flip sign; the price row is shared.
struct DriftDiffusion {
  Eigen::VectorXd b_hat;
  Eigen::MatrixXd sigma_hat;
};

DriftDiffusion assemble_drift_diffusion(const CoefficientSet& coeffs, Model model);

struct SderState {
  double t = 0.0;
  double x = 0.0;
  Eigen::VectorXd positions;  // holdings (short-sale) or cash (budget)
  Eigen::VectorXd regulator;  // cumulative regulator, one entry per constrained agent
};

/// Smallest dl >= 0 with predicted + (I - Q11) dl >= 0 componentwise
/// (complementary at every component). q11 is the constrained block of the
/// coupling matrix; contraction requires its spectral radius below one.
Eigen::VectorXd one_step_regulator(const Eigen::VectorXd& predicted,
                                   const Eigen::MatrixXd& q11, double tol = 1e-14,
                                   int max_iter = 10000);

/// One Euler step of the reflected dynamics: drift+diffusion predictor, then
/// a one-step discrete reflection restoring nonnegativity of the constrained
/// positions. The regulator feeds back into the price with weights
/// alpha_tilde (up under the short-sale model, down under the budget model).
SderState euler_step_sder(const SderState& state, const CoefficientSet& coeffs,
                          const Eigen::VectorXd& dw, double dt, Model model,
                          Eigen::VectorXd* regulator_increment = nullptr);

/// Full reflected trajectory driven by the panel. Deterministic in
/// (roster, x0, panel, model).
PathGrid simulate_sder(const AgentRoster& roster, double x0, const BrownianPanel& panel,
                       Model model);

/// Log-price path of the frictionless limit dynamics on the same panel
/// (coupled comparisons consume the identical increments).
std::vector<double> simulate_frictionless(const AgentRoster& roster, double x0,
                                          const BrownianPanel& panel);

}  // namespace tesim::sder
