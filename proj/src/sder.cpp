#include "tesim/sder.hpp"

#include <cmath>
#include <stdexcept>

#include "tesim/rng.hpp"

namespace tesim::sder {

BrownianPanel BrownianPanel::make(long steps, int dims, double dt, std::uint64_t seed) {
  if (steps < 0 || dims < 0) throw std::invalid_argument("BrownianPanel: negative shape");
  if (!(dt > 0.0)) throw std::invalid_argument("BrownianPanel: dt must be positive");
  BrownianPanel panel;
  panel.dt = dt;
  panel.seed = seed;
  panel.increments.resize(steps, dims);
  Rng rng(seed);
  const double sd = std::sqrt(dt);
  for (long k = 0; k < steps; ++k) {
    for (int j = 0; j < dims; ++j) panel.increments(k, j) = sd * rng.normal();
  }
  return panel;
}

BrownianPanel BrownianPanel::coarsen(int factor) const {
  if (factor < 1 || increments.rows() % factor != 0) {
    throw std::invalid_argument("BrownianPanel::coarsen: factor must divide the step count");
  }
  BrownianPanel out;
  out.dt = dt * factor;
  out.seed = seed;
  out.increments.resize(increments.rows() / factor, increments.cols());
  for (Eigen::Index k = 0; k < out.increments.rows(); ++k) {
    out.increments.row(k) = increments.middleRows(k * factor, factor).colwise().sum();
  }
  return out;
}

DriftDiffusion assemble_drift_diffusion(const CoefficientSet& coeffs, Model model) {
  const int n = coeffs.size();
  DriftDiffusion dd;
  dd.b_hat.resize(1 + n);
  dd.sigma_hat.resize(1 + n, n);
  const double mean_drift = coeffs.beta_tilde.sum() / coeffs.alpha_bar;
  const Eigen::RowVectorXd mean_diff = coeffs.sigma.colwise().sum() / coeffs.alpha_bar;
  dd.b_hat(0) = mean_drift;
  dd.sigma_hat.row(0) = mean_diff;
  const double flip = model == Model::Budget ? -1.0 : 1.0;
  for (int i = 0; i < n; ++i) {
    dd.b_hat(1 + i) = flip * (coeffs.beta_tilde(i) - coeffs.alpha(i) * mean_drift);
    dd.sigma_hat.row(1 + i) = flip * (coeffs.sigma.row(i) - coeffs.alpha(i) * mean_diff);
  }
  return dd;
}

Eigen::VectorXd one_step_regulator(const Eigen::VectorXd& predicted,
                                   const Eigen::MatrixXd& q11, double tol, int max_iter) {
  const Eigen::Index n1 = predicted.size();
  if (q11.rows() != n1 || q11.cols() != n1) {
    throw std::invalid_argument("one_step_regulator: dimension mismatch");
  }
  Eigen::VectorXd dl = Eigen::VectorXd::Zero(n1);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd coupled = q11 * dl;
    double delta = 0.0;
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double next = std::max(0.0, coupled(i) - predicted(i));
      delta = std::max(delta, std::abs(next - dl(i)));
      dl(i) = next;
    }
    if (delta < tol) return dl;
  }
  throw std::runtime_error("one_step_regulator: projection did not converge");
}

namespace {

inline double price_increment(const DriftDiffusion& dd, double dt, const Eigen::VectorXd& dw) {
  return dd.b_hat(0) * dt + dd.sigma_hat.row(0).dot(dw);
}

SderState step_with(const SderState& state, const DriftDiffusion& dd,
                    const CoefficientSet& coeffs, const Eigen::VectorXd& dw, double dt,
                    Model model, Eigen::VectorXd* regulator_increment) {
  const int n = coeffs.size();
  const int n1 = model == Model::Frictionless ? 0 : coeffs.n_constrained();
  SderState out = state;
  out.t = state.t + dt;
  out.x = state.x + price_increment(dd, dt, dw);
  for (int i = 0; i < n; ++i) {
    out.positions(i) =
        state.positions(i) + dd.b_hat(1 + i) * dt + dd.sigma_hat.row(1 + i).dot(dw);
  }

  Eigen::VectorXd dl = Eigen::VectorXd::Zero(n1);
  bool crossed = false;
  for (int i = 0; i < n1; ++i) {
    if (out.positions(i) < 0.0) {
      crossed = true;
      break;
    }
  }
  if (crossed) {
    dl = one_step_regulator(out.positions.head(n1), coeffs.q.topRows(n1));
    out.positions.head(n1) += dl;
    out.positions -= coeffs.q * dl;
    const double push = coeffs.alpha_tilde.head(n1).dot(dl);
    out.x += model == Model::Budget ? -push : push;
    out.regulator += dl;
  }
  if (regulator_increment) *regulator_increment = std::move(dl);
  return out;
}

}  // namespace

SderState euler_step_sder(const SderState& state, const CoefficientSet& coeffs,
                          const Eigen::VectorXd& dw, double dt, Model model,
                          Eigen::VectorXd* regulator_increment) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step_sder: dt must be positive");
  const DriftDiffusion dd = assemble_drift_diffusion(coeffs, model);
  return step_with(state, dd, coeffs, dw, dt, model, regulator_increment);
}

PathGrid simulate_sder(const AgentRoster& roster, double x0, const BrownianPanel& panel,
                       Model model) {
  const int n = roster.size();
  const int n1 = model == Model::Frictionless ? 0 : roster.n_constrained();
  const long steps = panel.increments.rows();
  if (panel.increments.cols() != n) {
    throw std::invalid_argument("simulate_sder: panel dimension must match the roster");
  }

  PathGrid grid;
  grid.dt = panel.dt;
  grid.model = model == Model::ShortSale ? "sder1" : model == Model::Budget ? "sder2" : "sder0";
  grid.position_label = model == Model::Budget ? "W" : "phi";
  grid.regulator_label = "L";
  grid.x.resize(static_cast<std::size_t>(steps) + 1);
  grid.positions.resize(steps + 1, n);
  grid.regulator_hat.resize(steps + 1, 0);
  grid.regulator.resize(steps + 1, n1);

  SderState state;
  state.t = 0.0;
  state.x = x0;
  state.positions = model == Model::Budget ? roster.initial_cash() : roster.initial_holdings();
  state.regulator = Eigen::VectorXd::Zero(n1);

  GridPath history(panel.dt, x0);
  history.reserve(static_cast<std::size_t>(steps) + 1);

  const bool constant = roster.constant_coefficients();
  CoefficientSet coeffs = agents::coefficients_at(roster, 0.0, history);
  DriftDiffusion dd = assemble_drift_diffusion(coeffs, model);

  grid.x[0] = x0;
  grid.positions.row(0) = state.positions.transpose();
  if (n1 > 0) grid.regulator.row(0).setZero();

  Eigen::VectorXd dl(n1);
  for (long k = 0; k < steps; ++k) {
    if (!constant) {
      coeffs = agents::coefficients_at(roster, state.t, history);
      dd = assemble_drift_diffusion(coeffs, model);
    }
    state = step_with(state, dd, coeffs, panel.increments.row(k).transpose(), panel.dt, model,
                      &dl);
    history.push_back(state.x);
    grid.x[static_cast<std::size_t>(k) + 1] = state.x;
    grid.positions.row(k + 1) = state.positions.transpose();
    if (n1 > 0) grid.regulator.row(k + 1) = grid.regulator.row(k) + dl.transpose();
  }
  return grid;
}

std::vector<double> simulate_frictionless(const AgentRoster& roster, double x0,
                                          const BrownianPanel& panel) {
  const int n = roster.size();
  const long steps = panel.increments.rows();
  if (panel.increments.cols() != n) {
    throw std::invalid_argument("simulate_frictionless: panel dimension must match the roster");
  }
  std::vector<double> x(static_cast<std::size_t>(steps) + 1);
  GridPath history(panel.dt, x0);
  history.reserve(x.size());

  const bool constant = roster.constant_coefficients();
  CoefficientSet coeffs = agents::coefficients_at(roster, 0.0, history);
  DriftDiffusion dd = assemble_drift_diffusion(coeffs, Model::Frictionless);

  x[0] = x0;
  double level = x0;
  for (long k = 0; k < steps; ++k) {
    if (!constant) {
      coeffs = agents::coefficients_at(roster, k * panel.dt, history);
      dd = assemble_drift_diffusion(coeffs, Model::Frictionless);
    }
    level = level + price_increment(dd, panel.dt, panel.increments.row(k).transpose());
    history.push_back(level);
    x[static_cast<std::size_t>(k) + 1] = level;
  }
  return x;
}

}  // namespace tesim::sder
