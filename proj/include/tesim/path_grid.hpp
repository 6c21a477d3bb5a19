#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "tesim/grid_path.hpp"

namespace tesim {

/// One simulated trajectory on a uniform grid, together with the per-step
/// bookkeeping needed to restate the run as a discrete reflection problem.
struct PathGrid {
  double dt = 1.0;
  Interp interp = Interp::Linear;
  std::string model;                   // "model1", "model2", "frictionless", ...
  std::string position_label = "phi";  // CSV column stem: "phi" or "W"
  std::string regulator_label = "Lhat";

  std::vector<double> x;           // log-price at grid points, size steps()+1
  Eigen::MatrixXd positions;       // (steps+1) x N holdings or cash; 0 cols for scalar models
  Eigen::MatrixXd regulator_hat;   // (steps+1) x N1 cumulative raw clamp gaps
  Eigen::MatrixXd regulator;       // (steps+1) x N1 cumulative rescaled regulator (or SDER L)

  // Step-level records (steps rows), populated by the discrete market models.
  Eigen::MatrixXd z_increments;    // per-step demand-side increments H
  Eigen::MatrixXd alpha_steps;     // per-step impact weights
  Eigen::VectorXd alpha_bar_steps;
  Eigen::VectorXd clearing_residual;  // |sum_i e_i(x_next)| per step
  Eigen::VectorXd clearing_scale;     // tolerance scale used by the solver per step

  std::size_t points() const { return x.size(); }
  std::size_t steps() const { return x.empty() ? 0 : x.size() - 1; }
  double time_at(std::size_t k) const { return dt * static_cast<double>(k); }
  double horizon() const { return time_at(steps()); }

  /// Log-price at an arbitrary time under this grid's interpolation rule.
  double x_at(double t) const;

  int n_positions() const { return static_cast<int>(positions.cols()); }
  int n_regulators() const {
    return static_cast<int>(regulator_hat.cols() > 0 ? regulator_hat.cols() : regulator.cols());
  }

  /// Cumulative regulator columns used for reporting: the raw clamp-gap
  /// accumulation when present, the rescaled/SDER regulator otherwise.
  const Eigen::MatrixXd& reporting_regulator() const {
    return regulator_hat.cols() > 0 ? regulator_hat : regulator;
  }

  void write_csv_header(std::ostream& os, bool with_path_id) const;
  void write_csv_rows(std::ostream& os, long path_id, bool with_path_id) const;
  void write_csv(std::ostream& os) const;  // header + rows, single-path layout
};

/// Round-trip-safe decimal rendering (17 significant digits).
std::string format_float(double value);

}  // namespace tesim
