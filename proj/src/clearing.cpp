#include "tesim/clearing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tesim::clearing {

namespace {

// Per-period view of the clearing problem at a fixed state and noise draw.
class PeriodProblem {
 public:
  PeriodProblem(const AgentRoster& roster, const MarketState& state, const NoiseDraw& noise,
                Model model)
      : roster_(roster), state_(state), noise_(noise), model_(model),
        ref_(state.history.at_step(static_cast<std::size_t>(state.step))),
        inv_n_(1.0 / state.resolution),
        inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(state.resolution))) {}

  double etilde(int i, double x) const {
    return roster_.agent(i).demand.value(x, ref_) + noise_.gbar(i) * inv_n_ +
           noise_.gtilde(i) * inv_sqrt_n_;
  }

  double position(int i) const {
    return model_ == Model::Budget ? state_.cash(i) : state_.holdings(i);
  }

  double executed(int i, double x) const {
    return agents::apply_constraint(roster_.agent(i), etilde(i, x), position(i), model_);
  }

  double aggregate(double x) const {
    double s = 0.0;
    for (int i = 0; i < roster_.size(); ++i) s += executed(i, x);
    return s;
  }

  // Slope of the aggregate: agents whose clamp binds contribute zero.
  double aggregate_slope(double x) const {
    double s = 0.0;
    for (int i = 0; i < roster_.size(); ++i) {
      const agents::AgentSpec& ag = roster_.agent(i);
      if (model_ != Model::Frictionless && ag.group == agents::Group::Constrained) {
        const double e = etilde(i, x);
        if (model_ == Model::ShortSale && e < -position(i)) continue;
        if (model_ == Model::Budget && e > position(i)) continue;
      }
      s += ag.demand.slope(x, ref_);
    }
    return s;
  }

  double ref() const { return ref_; }
  double noise_total() const {
    return noise_.gbar.sum() * inv_n_ + noise_.gtilde.sum() * inv_sqrt_n_;
  }

 private:
  const AgentRoster& roster_;
  const MarketState& state_;
  const NoiseDraw& noise_;
  Model model_;
  double ref_;
  double inv_n_;
  double inv_sqrt_n_;
};

}  // namespace

MarketState initial_state(const AgentRoster& roster, double x0, int resolution, Model model,
                          Interp interp) {
  if (resolution < 1) throw std::invalid_argument("initial_state: resolution must be >= 1");
  MarketState st;
  st.resolution = resolution;
  st.log_price = x0;
  st.model = model;
  st.holdings = roster.initial_holdings();
  st.cash = roster.initial_cash();
  st.history = GridPath(1.0 / resolution, x0, interp);
  return st;
}

StepRecord solve_temporary_equilibrium(const AgentRoster& roster, const MarketState& state,
                                       const NoiseDraw& noise, Model model) {
  const int n = roster.size();
  PeriodProblem problem(roster, state, noise, model);
  const double x0 = state.log_price;

  double scale = 1.0;
  for (int i = 0; i < n; ++i) scale += std::abs(problem.executed(i, x0));

  double delta_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) delta_min = std::min(delta_min, roster.agent(i).demand.delta0);

  // Bracket by doubling expansion: the aggregate is decreasing in x.
  double half = std::max(1.0, 2.0 * std::abs(problem.noise_total()) / (n * delta_min));
  double lo = x0 - half, hi = x0 + half;
  double a_lo = problem.aggregate(lo), a_hi = problem.aggregate(hi);
  int expansions = 0;
  while (a_lo < 0.0 || a_hi > 0.0) {
    if (++expansions > 64) {
      throw std::runtime_error(
          "solve_temporary_equilibrium: root not bracketed after expansion cap (demand "
          "family mis-specified?)");
    }
    half *= 2.0;
    lo = x0 - half;
    hi = x0 + half;
    a_lo = problem.aggregate(lo);
    a_hi = problem.aggregate(hi);
  }

  auto bisect_to = [&](double width) {
    while (hi - lo > width * std::max(1.0, std::abs(lo) + std::abs(hi))) {
      const double mid = 0.5 * (lo + hi);
      if (problem.aggregate(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  };
  auto polish = [&](double x, double ax) {
    for (int it = 0; it < 4 && ax != 0.0; ++it) {
      const double s = problem.aggregate_slope(x);
      if (!(s < 0.0)) break;
      const double x_new = x - ax / s;
      if (!(x_new > lo && x_new < hi)) break;
      const double a_new = problem.aggregate(x_new);
      if (std::abs(a_new) < std::abs(ax)) {
        x = x_new;
        ax = a_new;
      } else {
        break;
      }
    }
    return std::pair<double, double>(x, ax);
  };

  bisect_to(1e-13);
  double x = 0.5 * (lo + hi);
  double ax = problem.aggregate(x);
  std::tie(x, ax) = polish(x, ax);
  if (std::abs(ax) > 1e-13 * scale) {
    // Newton landed on a kink; refine the bracket down to rounding width.
    bisect_to(8.0 * std::numeric_limits<double>::epsilon());
    x = 0.5 * (lo + hi);
    ax = problem.aggregate(x);
    std::tie(x, ax) = polish(x, ax);
  }
  if (std::abs(ax) > 1e-12 * scale) {
    throw std::runtime_error("solve_temporary_equilibrium: residual tolerance not met");
  }

  StepRecord rec;
  rec.x_next = x;
  rec.scale = scale;
  rec.residual = std::abs(ax);
  rec.executed.resize(n);
  rec.z_increment.resize(n);
  rec.alpha.resize(n);
  const int n1 = roster.n_constrained();
  rec.eta_hat = Eigen::VectorXd::Zero(n1);
  rec.eta = Eigen::VectorXd::Zero(n1);
  const double dx = x - x0;
  double alpha_bar = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e_free = problem.etilde(i, x);
    rec.executed(i) = agents::apply_constraint(roster.agent(i), e_free, problem.position(i),
                                               model);
    const double alpha_i = roster.agent(i).demand.alpha_at_ref();
    rec.alpha(i) = alpha_i;
    alpha_bar += alpha_i;
    rec.z_increment(i) = e_free + alpha_i * dx;
    if (model != Model::Frictionless && i < n1) {
      // Clamp gap: (e - etilde) for the short-sale floor, (etilde - e) for
      // the budget cap. Either way nonnegative and zero when inactive.
      rec.eta_hat(i) =
          model == Model::ShortSale ? rec.executed(i) - e_free : e_free - rec.executed(i);
    }
  }
  rec.alpha_bar = alpha_bar;
  for (int i = 0; i < n1; ++i) {
    rec.eta(i) = (1.0 - rec.alpha(i) / alpha_bar) * rec.eta_hat(i);
  }
  return rec;
}

namespace {

MarketState advance(const AgentRoster& roster, MarketState state, const NoiseDraw& noise,
                    Model model, StepRecord* record) {
  StepRecord rec = solve_temporary_equilibrium(roster, state, noise, model);
  if (model == Model::Budget) {
    state.cash -= rec.executed;
  } else {
    state.holdings += rec.executed;
  }
  state.log_price = rec.x_next;
  state.history.push_back(rec.x_next);
  state.step += 1;
  if (record) *record = std::move(rec);
  return state;
}

}  // namespace

MarketState step_model_I(const AgentRoster& roster, MarketState state, const NoiseDraw& noise,
                         StepRecord* record) {
  if (state.model != Model::ShortSale) {
    throw std::invalid_argument("step_model_I: state does not belong to the short-sale model");
  }
  return advance(roster, std::move(state), noise, Model::ShortSale, record);
}

MarketState step_model_II(const AgentRoster& roster, MarketState state, const NoiseDraw& noise,
                          StepRecord* record) {
  if (state.model != Model::Budget) {
    throw std::invalid_argument("step_model_II: state does not belong to the budget model");
  }
  return advance(roster, std::move(state), noise, Model::Budget, record);
}

MarketState step_frictionless(const AgentRoster& roster, MarketState state,
                              const NoiseDraw& noise, StepRecord* record) {
  if (state.model != Model::Frictionless) {
    throw std::invalid_argument("step_frictionless: state does not belong to the frictionless "
                                "model");
  }
  return advance(roster, std::move(state), noise, Model::Frictionless, record);
}

double fs_baseline_step(double x, double beta_step, double f_bar, double delta_draw) {
  return x + beta_step * (x - f_bar) + delta_draw;
}

PathGrid simulate_discrete_path(const AgentRoster& roster, double x0, double horizon,
                                int resolution, Model model, std::uint64_t seed, Interp interp) {
  if (horizon < 0.0) throw std::invalid_argument("simulate_discrete_path: negative horizon");
  const long steps = std::lround(horizon * resolution);
  const int n = roster.size();
  const int n1 = model == Model::Frictionless ? 0 : roster.n_constrained();

  PathGrid grid;
  grid.dt = 1.0 / resolution;
  grid.interp = interp;
  grid.model = model == Model::ShortSale   ? "model1"
               : model == Model::Budget    ? "model2"
                                           : "frictionless";
  grid.position_label = model == Model::Budget ? "W" : "phi";
  grid.x.resize(static_cast<std::size_t>(steps) + 1);
  grid.positions.resize(steps + 1, n);
  grid.regulator_hat.resize(steps + 1, n1);
  grid.regulator.resize(steps + 1, n1);
  grid.z_increments.resize(steps, n);
  grid.alpha_steps.resize(steps, n);
  grid.alpha_bar_steps.resize(steps);
  grid.clearing_residual.resize(steps);
  grid.clearing_scale.resize(steps);

  MarketState state = initial_state(roster, x0, resolution, model, interp);
  state.history.reserve(static_cast<std::size_t>(steps) + 1);
  Rng rng(seed);

  grid.x[0] = x0;
  grid.positions.row(0) = (model == Model::Budget ? state.cash : state.holdings).transpose();
  if (n1 > 0) {
    grid.regulator_hat.row(0).setZero();
    grid.regulator.row(0).setZero();
  }

  StepRecord rec;
  for (long k = 0; k < steps; ++k) {
    const NoiseDraw noise = agents::sample_noise(roster, state.log_price, rng);
    switch (model) {
      case Model::ShortSale:
        state = step_model_I(roster, std::move(state), noise, &rec);
        break;
      case Model::Budget:
        state = step_model_II(roster, std::move(state), noise, &rec);
        break;
      case Model::Frictionless:
        state = step_frictionless(roster, std::move(state), noise, &rec);
        break;
    }
    grid.x[static_cast<std::size_t>(k) + 1] = state.log_price;
    grid.positions.row(k + 1) =
        (model == Model::Budget ? state.cash : state.holdings).transpose();
    if (n1 > 0) {
      grid.regulator_hat.row(k + 1) = grid.regulator_hat.row(k) + rec.eta_hat.transpose();
      grid.regulator.row(k + 1) = grid.regulator.row(k) + rec.eta.transpose();
    }
    grid.z_increments.row(k) = rec.z_increment.transpose();
    grid.alpha_steps.row(k) = rec.alpha.transpose();
    grid.alpha_bar_steps(k) = rec.alpha_bar;
    grid.clearing_residual(k) = rec.residual;
    grid.clearing_scale(k) = rec.scale;
  }
  return grid;
}

PathGrid simulate_fs_path(const FsParams& params, double x0, double horizon, int resolution,
                          std::uint64_t seed) {
  if (horizon < 0.0) throw std::invalid_argument("simulate_fs_path: negative horizon");
  if (resolution < 1) throw std::invalid_argument("simulate_fs_path: resolution must be >= 1");
  const long steps = std::lround(horizon * resolution);

  PathGrid grid;
  grid.dt = 1.0 / resolution;
  grid.model = "fs_baseline";
  grid.x.resize(static_cast<std::size_t>(steps) + 1);
  grid.positions.resize(steps + 1, 0);
  grid.regulator_hat.resize(steps + 1, 0);
  grid.regulator.resize(steps + 1, 0);

  Rng rng(seed);
  const double beta_step = params.beta_bar / resolution;
  const double noise_sd = params.sigma_bar / std::sqrt(static_cast<double>(resolution));
  double x = x0;
  grid.x[0] = x;
  for (long k = 0; k < steps; ++k) {
    const double delta = noise_sd * rng.normal();
    x = fs_baseline_step(x, beta_step, params.f_bar, delta);
    grid.x[static_cast<std::size_t>(k) + 1] = x;
  }
  return grid;
}

}  // namespace tesim::clearing
