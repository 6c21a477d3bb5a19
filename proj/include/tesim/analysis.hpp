#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tesim/agents.hpp"
#include "tesim/clearing.hpp"
#include "tesim/path_grid.hpp"

namespace tesim::analysis {

using agents::AgentRoster;
using agents::Model;

/// Two-sample Kolmogorov-Smirnov distance (sup norm between empirical CDFs).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Quantile of the asymptotic Kolmogorov distribution: the value q with
/// P(K <= q) = p.
double kolmogorov_quantile(double p);

/// Asymptotic null quantile of the two-sample KS distance at sample sizes
/// (m, n): kolmogorov_quantile(p) * sqrt((m + n) / (m n)).
double ks_two_sample_null_quantile(double p, std::size_t m, std::size_t n);

struct WeakConvergenceResult {
  std::vector<int> levels;
  std::vector<double> ks;  // distance to the reference law per level
  double reference_dt = 0.0;
  int paths = 0;
  double threshold = 0.0;  // pass bound for the finest level
  bool decreasing = false; // strictly decreasing across levels
};

/// Empirical-law comparison of the terminal discrete-market log-price against
/// a fine-grid reflected-dynamics reference, per grid resolution. Requires at
/// least 100 paths per level and reference_dt <= 1 / (4 max level).
WeakConvergenceResult weak_convergence_diagnostic(const AgentRoster& roster, double x0,
                                                  double horizon, Model model,
                                                  const std::vector<int>& levels, int paths,
                                                  double reference_dt, std::uint64_t seed,
                                                  int workers);

struct ComparisonStats {
  double min_diff = 0.0;   // min over paths and grid times of X - Xhat
  double max_diff = 0.0;
  double mean_diff = 0.0;
  long violations = 0;     // sign violations beyond the tolerance
  double tolerance = 0.0;
  int paths = 0;
};

/// Coupled constrained-vs-frictionless comparison on shared Brownian panels.
/// Violations count X < Xhat - tol (short-sale) or X > Xhat + tol (budget).
ComparisonStats comparison_check(const AgentRoster& roster, double x0, double horizon,
                                 double dt, Model model, int paths, std::uint64_t seed,
                                 int workers, double tolerance = 1e-12);

struct OuMoments {
  double sample_mean = 0.0;
  double sample_var = 0.0;
  double exact_mean = 0.0;
  double exact_var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
  double z_mean = 0.0;
  double z_var = 0.0;
  int paths = 0;
};

/// Terminal moments of the linear-demand baseline against the closed-form
/// mean-reverting limit: mean f_bar + (x0 - f_bar) e^{beta T} and variance
/// sigma^2 (1 - e^{2 beta T}) / (-2 beta) (sigma^2 T when beta = 0).
/// Requires beta_bar <= 0.
OuMoments ou_moment_check(const clearing::FsParams& params, double x0, double horizon,
                          int resolution, int paths, std::uint64_t seed, int workers);

/// Max over constrained agents of sum_k position(k+1) * regulator increment(k).
/// Exactly zero for discrete short-sale paths; small for reflected-dynamics
/// paths (the reflection lands on the boundary up to solver tolerance).
double complementarity_audit(const PathGrid& path);

struct DiagnosticsReport {
  std::string model;
  int paths = 0;
  std::uint64_t master_seed = 0;
  std::optional<WeakConvergenceResult> weak_convergence;
  std::optional<ComparisonStats> comparison;
  std::optional<OuMoments> ou_moments;
  std::optional<double> complementarity_discrete;
  std::optional<double> complementarity_sder;

  /// Fixed-field-order JSON rendering.
  std::string to_json_string() const;
};

}  // namespace tesim::analysis
