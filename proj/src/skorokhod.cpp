#include "tesim/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tesim::skorokhod {

SpectralRadiusResult spectral_radius(const Eigen::MatrixXd& v, double rel_tol, int max_iter) {
  if (v.rows() != v.cols()) {
    throw std::invalid_argument("spectral_radius: matrix must be square");
  }
  const Eigen::Index n = v.rows();
  if (n == 0) return {0.0, true, 0};

  const Eigen::MatrixXd m = v.cwiseAbs();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  SpectralRadiusResult res;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd y = m * x + x;  // (|V| + I) x, keeps x strictly positive
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ratio = y(i) / x(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    res.iterations = it;
    if (hi - lo <= rel_tol * hi) {
      res.value = 0.5 * (hi + lo) - 1.0;
      res.converged = true;
      return res;
    }
    x = y / y.maxCoeff();
  }
  // Collatz-Wielandt bounds did not tighten; report the norm bound instead.
  const double row = m.rowwise().sum().maxCoeff();
  const double col = m.colwise().sum().maxCoeff();
  res.value = std::min(row, col);
  res.converged = false;
  return res;
}

Solution1d solve_discrete_skorokhod_1d(const std::vector<double>& y) {
  if (y.empty()) throw std::invalid_argument("solve_discrete_skorokhod_1d: empty input");
  if (y.front() < 0.0) {
    throw std::invalid_argument(
        "solve_discrete_skorokhod_1d: initial value must be nonnegative");
  }
  Solution1d sol;
  sol.regulator.resize(y.size());
  sol.constrained.resize(y.size());
  double running = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    running = std::max(running, -y[k]);
    sol.regulator[k] = running;
    sol.constrained[k] = y[k] + running;
  }
  return sol;
}

ReflectionSpec ReflectionSpec::constant(const Eigen::MatrixXd& q, std::size_t steps) {
  ReflectionSpec spec;
  spec.q_path.assign(steps, q);
  spec.v = q;
  return spec;
}

void ReflectionSpec::validate() const {
  if (v.rows() != v.cols()) {
    throw std::invalid_argument("ReflectionSpec: V must be square");
  }
  const Eigen::Index n1 = v.rows();
  for (Eigen::Index i = 0; i < n1; ++i) {
    if (v(i, i) != 0.0) throw std::invalid_argument("ReflectionSpec: V must have zero diagonal");
  }
  if (n1 > 0 && v.minCoeff() < 0.0) {
    throw std::invalid_argument("ReflectionSpec: V must be nonnegative");
  }
  for (const auto& q : q_path) {
    if (q.rows() != n1 || q.cols() != n1) {
      throw std::invalid_argument("ReflectionSpec: coupling matrix of wrong shape");
    }
    for (Eigen::Index i = 0; i < n1; ++i) {
      if (q(i, i) != 0.0) {
        throw std::invalid_argument("ReflectionSpec: coupling matrices must have zero diagonal");
      }
    }
    if (n1 > 0 && q.minCoeff() < 0.0) {
      throw std::invalid_argument("ReflectionSpec: coupling matrices must be nonnegative");
    }
    if (n1 > 0 && ((q - v).maxCoeff() > 1e-12)) {
      throw std::invalid_argument("ReflectionSpec: coupling matrices must be dominated by V");
    }
  }
  if (n1 > 0) {
    const auto rho = spectral_radius(v);
    if (!(rho.value < 1.0)) {
      throw std::invalid_argument("ReflectionSpec: spectral radius of V must be below one");
    }
  }
}

namespace {

// c(l, i) = sum_j sum_{m < l} Q^{ij}_m (L^j_{m+1} - L^j_m)
void accumulate_coupling(const std::vector<Eigen::MatrixXd>& q_path,
                         const Eigen::MatrixXd& regulator, Eigen::MatrixXd& coupling) {
  const Eigen::Index rows = regulator.rows();
  coupling.row(0).setZero();
  for (Eigen::Index l = 1; l < rows; ++l) {
    const Eigen::VectorXd dl = (regulator.row(l) - regulator.row(l - 1)).transpose();
    coupling.row(l) = coupling.row(l - 1) + (q_path[static_cast<std::size_t>(l - 1)] * dl).transpose();
  }
}

}  // namespace

SkorokhodSolution solve_discrete_skorokhod_oblique(const Eigen::MatrixXd& y,
                                                   const ReflectionSpec& spec, double tol,
                                                   int max_iter) {
  spec.validate();
  const Eigen::Index rows = y.rows();
  const Eigen::Index n1 = y.cols();
  if (rows < 1) throw std::invalid_argument("solve_discrete_skorokhod_oblique: empty input");
  if (static_cast<Eigen::Index>(spec.q_path.size()) != rows - 1) {
    throw std::invalid_argument(
        "solve_discrete_skorokhod_oblique: need one coupling matrix per step");
  }
  if (spec.v.rows() != n1) {
    throw std::invalid_argument("solve_discrete_skorokhod_oblique: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < n1; ++i) {
    if (y(0, i) < 0.0) {
      throw std::invalid_argument(
          "solve_discrete_skorokhod_oblique: initial values must be nonnegative");
    }
  }

  SkorokhodSolution sol;
  sol.regulator = Eigen::MatrixXd::Zero(rows, n1);
  Eigen::MatrixXd coupling(rows, n1);
  Eigen::MatrixXd next(rows, n1);

  bool converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    accumulate_coupling(spec.q_path, sol.regulator, coupling);
    for (Eigen::Index i = 0; i < n1; ++i) {
      double running = 0.0;
      for (Eigen::Index k = 0; k < rows; ++k) {
        running = std::max(running, coupling(k, i) - y(k, i));
        next(k, i) = running;
      }
    }
    const double delta = (next - sol.regulator).cwiseAbs().maxCoeff();
    if ((next - sol.regulator).minCoeff() < -1e-12) sol.monotone_iterates = false;
    sol.regulator.swap(next);
    sol.sweep_deltas.push_back(delta);
    sol.iterations = it;
    if (delta < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error(
        "solve_discrete_skorokhod_oblique: fixed point did not converge within the iteration "
        "cap (reflection data likely violates the spectral radius condition)");
  }

  accumulate_coupling(spec.q_path, sol.regulator, coupling);
  sol.constrained = y + sol.regulator - coupling;
  return sol;
}

RegulatorModulusSides verify_prop3_bound(const Eigen::MatrixXd& y,
                                         const SkorokhodSolution& solution, int l, int k) {
  if (l < 0 || k < l || k >= y.rows() || y.rows() != solution.regulator.rows()) {
    throw std::invalid_argument("verify_prop3_bound: bad step range");
  }
  RegulatorModulusSides sides;
  sides.lhs = (solution.regulator.row(k) - solution.regulator.row(l)).squaredNorm();
  for (int m = l; m <= k; ++m) {
    sides.rhs_raw = std::max(sides.rhs_raw, (y.row(m) - y.row(l)).squaredNorm());
  }
  return sides;
}

}  // namespace tesim::skorokhod
