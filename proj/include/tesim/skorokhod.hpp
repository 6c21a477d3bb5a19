#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tesim::skorokhod {

struct SpectralRadiusResult {
  double value = 0.0;
  bool converged = true;  // false: value is the max row/column-sum fallback bound
  int iterations = 0;
};

/// Spectral radius of a square matrix with nonnegative entries, by power
/// iteration on |V| + I (the shift removes oscillation on periodic
/// structures). Falls back to min(max row sum, max column sum) when the
/// Collatz-Wielandt bounds fail to tighten within the iteration cap.
SpectralRadiusResult spectral_radius(const Eigen::MatrixXd& v,
                                     double rel_tol = 1e-12,
                                     int max_iter = 10000);

struct Solution1d {
  std::vector<double> regulator;    // running max of (-Y)_+, nondecreasing from 0
  std::vector<double> constrained;  // Y + regulator, nonnegative
};

/// Classical one-dimensional discrete Skorokhod problem. Requires Y[0] >= 0.
Solution1d solve_discrete_skorokhod_1d(const std::vector<double>& y);

/// Reflection data for the oblique problem in the nonnegative orthant:
/// one coupling matrix per grid step (evaluated at the step's left endpoint)
/// and a dominating matrix V with zero diagonal and spectral radius < 1.
struct ReflectionSpec {
  std::vector<Eigen::MatrixXd> q_path;  // steps entries, each n1 x n1
  Eigen::MatrixXd v;                    // n1 x n1 dominating matrix

  static ReflectionSpec constant(const Eigen::MatrixXd& q, std::size_t steps);

  /// Throws std::invalid_argument on zero-diagonal/nonnegativity/domination
  /// violations or when the spectral radius of v is not below one.
  void validate() const;
};

struct SkorokhodSolution {
  Eigen::MatrixXd regulator;    // (steps+1) x n1, componentwise nondecreasing, row 0 = 0
  Eigen::MatrixXd constrained;  // (steps+1) x n1, nonnegative at grid points
  int iterations = 0;
  std::vector<double> sweep_deltas;  // max-norm change per fixed-point sweep
  bool monotone_iterates = true;
};

/// Minimal solution of the discrete Skorokhod problem with oblique reflection:
/// L^i_k = max_{0<=l<=k} ( sum_j int_0^l Q^{ij} dL^j  -  Y^i_l )_+,
/// found by iterating the max formula from L = 0. The iteration is isotone
/// and contracts at rate rho(V), so it converges; exceeding the iteration cap
/// throws std::runtime_error.
///
/// y has one row per grid point ((steps+1) x n1) and must be nonnegative in
/// row 0. The time integral is discretized with the coupling matrix at the
/// step's left endpoint against the regulator increment over the step.
SkorokhodSolution solve_discrete_skorokhod_oblique(const Eigen::MatrixXd& y,
                                                   const ReflectionSpec& spec,
                                                   double tol = 1e-12,
                                                   int max_iter = 10000);

struct RegulatorModulusSides {
  double lhs = 0.0;      // sum_i |L^i_k - L^i_l|^2
  double rhs_raw = 0.0;  // max_{l<=m<=k} sum_i |Y^i_m - Y^i_l|^2
};

/// Both sides of the regulator modulus bound (without the V-dependent
/// constant, which is estimated empirically by callers).
RegulatorModulusSides verify_prop3_bound(const Eigen::MatrixXd& y,
                                         const SkorokhodSolution& solution,
                                         int l, int k);

}  // namespace tesim::skorokhod
