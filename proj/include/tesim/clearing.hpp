#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "tesim/agents.hpp"
#include "tesim/path_grid.hpp"

namespace tesim::clearing {

using agents::AgentRoster;
using agents::Model;
using agents::NoiseDraw;

/// Discrete market state between clearing periods.
struct MarketState {
  int step = 0;
  int resolution = 1;  // periods per unit time
  double log_price = 0.0;
  Eigen::VectorXd holdings;  // shares (short-sale / frictionless models)
  Eigen::VectorXd cash;      // dollars (budget model)
  GridPath history;          // log-price path on [0, step/resolution]
  Model model = Model::Frictionless;
};

MarketState initial_state(const AgentRoster& roster, double x0, int resolution, Model model,
                          Interp interp = Interp::Linear);

/// Everything one clearing period produces.
struct StepRecord {
  double x_next = 0.0;
  Eigen::VectorXd executed;     // constrained demands at x_next; sums to ~0
  Eigen::VectorXd eta_hat;      // raw clamp gaps, one per constrained agent
  Eigen::VectorXd eta;          // rescaled gaps (1 - alpha_i / alpha_bar) * eta_hat
  Eigen::VectorXd z_increment;  // H_i = etilde_i(x_next) + alpha_i (x_next - x_k)
  Eigen::VectorXd alpha;        // per-agent impact weights this period
  double alpha_bar = 0.0;
  double residual = 0.0;  // |sum_i e_i(x_next)|
  double scale = 0.0;     // residual tolerance scale 1 + sum_i |e_i(x_k)|
};

/// Solves the market clearing equation sum_i e_i(x) = 0 for the next
/// log-price. The aggregate is strictly decreasing, so the root is unique;
/// it is bracketed by doubling expansion, bisected, and polished with Newton
/// steps on the analytic aggregate slope. Throws std::runtime_error when the
/// bracket expansion cap is hit or the residual tolerance cannot be met.
StepRecord solve_temporary_equilibrium(const AgentRoster& roster, const MarketState& state,
                                       const NoiseDraw& noise, Model model);

/// Clearing period under the short-sale constraint: holdings move by the
/// executed demands, so the total share count is conserved and constrained
/// holdings stay nonnegative (a binding clamp lands exactly on zero).
MarketState step_model_I(const AgentRoster& roster, MarketState state, const NoiseDraw& noise,
                         StepRecord* record = nullptr);

/// Clearing period under the budget constraint: cash moves by minus the
/// executed dollar demands, so total cash is conserved and constrained cash
/// stays nonnegative.
MarketState step_model_II(const AgentRoster& roster, MarketState state, const NoiseDraw& noise,
                          StepRecord* record = nullptr);

/// Clearing period with no constraints applied.
MarketState step_frictionless(const AgentRoster& roster, MarketState state,
                              const NoiseDraw& noise, StepRecord* record = nullptr);

/// One step of the linear-demand baseline difference equation:
/// x + beta_step * (x - f_bar) + delta_draw.
double fs_baseline_step(double x, double beta_step, double f_bar, double delta_draw);

/// Full discrete market trajectory on [0, horizon] at the given resolution.
/// Deterministic in (roster, x0, horizon, resolution, model, seed).
PathGrid simulate_discrete_path(const AgentRoster& roster, double x0, double horizon,
                                int resolution, Model model, std::uint64_t seed,
                                Interp interp = Interp::Linear);

/// Linear-demand baseline parameters (per unit time). The per-step recursion
/// uses beta_bar / n and noise with standard deviation sigma_bar / sqrt(n).
struct FsParams {
  double beta_bar = -1.0;
  double f_bar = 0.0;
  double sigma_bar = 0.0;
};

PathGrid simulate_fs_path(const FsParams& params, double x0, double horizon, int resolution,
                          std::uint64_t seed);

}  // namespace tesim::clearing
