#include "tesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tesim/parallel.hpp"
#include "tesim/rng.hpp"
#include "tesim/sder.hpp"

namespace tesim::analysis {

namespace {

// Sub-stream roles under one master seed.
enum SeedRole : std::uint64_t {
  kReferenceRole = 1,
  kLevelRoleBase = 100,
  kComparisonRole = 2,
  kOuRole = 3,
};

std::uint64_t path_seed(std::uint64_t master, std::uint64_t role, long index) {
  return derive_seed(derive_seed(master, role), static_cast<std::uint64_t>(index));
}

}  // namespace

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return d;
}

namespace {

double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return 1.0 - 2.0 * sum;
}

}  // namespace

double kolmogorov_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("kolmogorov_quantile: p in (0,1) required");
  double lo = 1e-3, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ks_two_sample_null_quantile(double p, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw std::invalid_argument("ks null quantile: empty sample sizes");
  const double mm = static_cast<double>(m), nn = static_cast<double>(n);
  return kolmogorov_quantile(p) * std::sqrt((mm + nn) / (mm * nn));
}

WeakConvergenceResult weak_convergence_diagnostic(const AgentRoster& roster, double x0,
                                                  double horizon, Model model,
                                                  const std::vector<int>& levels, int paths,
                                                  double reference_dt, std::uint64_t seed,
                                                  int workers) {
  if (paths < 100) {
    throw std::invalid_argument("weak_convergence_diagnostic: at least 100 paths required");
  }
  if (levels.empty()) throw std::invalid_argument("weak_convergence_diagnostic: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) {
      throw std::invalid_argument("weak_convergence_diagnostic: levels must increase");
    }
  }
  const int max_level = levels.back();
  if (!(reference_dt > 0.0) || reference_dt > 1.0 / (4.0 * max_level) + 1e-15) {
    throw std::invalid_argument(
        "weak_convergence_diagnostic: reference_dt must be at most 1/(4 max level)");
  }

  WeakConvergenceResult result;
  result.levels = levels;
  result.reference_dt = reference_dt;
  result.paths = paths;
  result.threshold =
      1.5 * ks_two_sample_null_quantile(0.99, static_cast<std::size_t>(paths),
                                        static_cast<std::size_t>(paths));

  const long ref_steps = std::lround(horizon / reference_dt);
  std::vector<double> reference(static_cast<std::size_t>(paths));
  parallel_for_index(paths, workers, [&](long i) {
    const auto panel = sder::BrownianPanel::make(ref_steps, roster.size(), reference_dt,
                                                 path_seed(seed, kReferenceRole, i));
    reference[static_cast<std::size_t>(i)] =
        sder::simulate_sder(roster, x0, panel, model).x.back();
  });

  std::vector<double> terminal(static_cast<std::size_t>(paths));
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const int n = levels[li];
    parallel_for_index(paths, workers, [&](long i) {
      terminal[static_cast<std::size_t>(i)] =
          clearing::simulate_discrete_path(roster, x0, horizon, n, model,
                                           path_seed(seed, kLevelRoleBase + li, i))
              .x.back();
    });
    result.ks.push_back(ks_two_sample(terminal, reference));
  }
  result.decreasing = true;
  for (std::size_t i = 1; i < result.ks.size(); ++i) {
    if (!(result.ks[i] < result.ks[i - 1])) result.decreasing = false;
  }
  return result;
}

ComparisonStats comparison_check(const AgentRoster& roster, double x0, double horizon,
                                 double dt, Model model, int paths, std::uint64_t seed,
                                 int workers, double tolerance) {
  if (model == Model::Frictionless) {
    throw std::invalid_argument("comparison_check: needs a constrained model");
  }
  const long steps = std::lround(horizon / dt);
  std::vector<double> mins(static_cast<std::size_t>(paths)),
      maxs(static_cast<std::size_t>(paths)), sums(static_cast<std::size_t>(paths));
  std::vector<long> viols(static_cast<std::size_t>(paths));
  parallel_for_index(paths, workers, [&](long p) {
    const auto panel = sder::BrownianPanel::make(steps, roster.size(), dt,
                                                 path_seed(seed, kComparisonRole, p));
    const PathGrid reflected = sder::simulate_sder(roster, x0, panel, model);
    const std::vector<double> frictionless = sder::simulate_frictionless(roster, x0, panel);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    long v = 0;
    for (std::size_t k = 0; k < reflected.x.size(); ++k) {
      const double diff = reflected.x[k] - frictionless[k];
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
      sum += diff;
      if (model == Model::ShortSale ? diff < -tolerance : diff > tolerance) ++v;
    }
    mins[static_cast<std::size_t>(p)] = lo;
    maxs[static_cast<std::size_t>(p)] = hi;
    sums[static_cast<std::size_t>(p)] = sum / static_cast<double>(reflected.x.size());
    viols[static_cast<std::size_t>(p)] = v;
  });

  ComparisonStats stats;
  stats.tolerance = tolerance;
  stats.paths = paths;
  stats.min_diff = std::numeric_limits<double>::infinity();
  stats.max_diff = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < paths; ++p) {
    stats.min_diff = std::min(stats.min_diff, mins[static_cast<std::size_t>(p)]);
    stats.max_diff = std::max(stats.max_diff, maxs[static_cast<std::size_t>(p)]);
    stats.mean_diff += sums[static_cast<std::size_t>(p)];
    stats.violations += viols[static_cast<std::size_t>(p)];
  }
  stats.mean_diff /= std::max(1, paths);
  return stats;
}

OuMoments ou_moment_check(const clearing::FsParams& params, double x0, double horizon,
                          int resolution, int paths, std::uint64_t seed, int workers) {
  if (params.beta_bar > 0.0) {
    throw std::invalid_argument("ou_moment_check: beta_bar must be nonpositive");
  }
  if (paths < 2) throw std::invalid_argument("ou_moment_check: need at least two paths");
  std::vector<double> terminal(static_cast<std::size_t>(paths));
  parallel_for_index(paths, workers, [&](long p) {
    terminal[static_cast<std::size_t>(p)] =
        clearing::simulate_fs_path(params, x0, horizon, resolution, path_seed(seed, kOuRole, p))
            .x.back();
  });

  OuMoments m;
  m.paths = paths;
  double sum = 0.0;
  for (double v : terminal) sum += v;
  m.sample_mean = sum / paths;
  double ss = 0.0;
  for (double v : terminal) ss += (v - m.sample_mean) * (v - m.sample_mean);
  m.sample_var = ss / (paths - 1);

  const double b = params.beta_bar;
  const double s2 = params.sigma_bar * params.sigma_bar;
  m.exact_mean = params.f_bar + (x0 - params.f_bar) * std::exp(b * horizon);
  m.exact_var = b == 0.0 ? s2 * horizon : s2 * (1.0 - std::exp(2.0 * b * horizon)) / (-2.0 * b);
  m.se_mean = std::sqrt(m.sample_var / paths);
  m.se_var = m.sample_var * std::sqrt(2.0 / (paths - 1));
  auto z = [](double gap, double se) {
    if (se > 0.0) return gap / se;
    return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  m.z_mean = z(m.sample_mean - m.exact_mean, m.se_mean);
  m.z_var = z(m.sample_var - m.exact_var, m.se_var);
  return m;
}

double complementarity_audit(const PathGrid& path) {
  const Eigen::MatrixXd& reg = path.reporting_regulator();
  const Eigen::Index n1 = reg.cols();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n1; ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k + 1 < reg.rows(); ++k) {
      sum += path.positions(k + 1, i) * (reg(k + 1, i) - reg(k, i));
    }
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

std::string DiagnosticsReport::to_json_string() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["paths"] = paths;
  j["master_seed"] = master_seed;
  if (weak_convergence) {
    nlohmann::ordered_json w;
    nlohmann::ordered_json ks_by_n = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < weak_convergence->levels.size(); ++i) {
      ks_by_n[std::to_string(weak_convergence->levels[i])] = weak_convergence->ks[i];
    }
    w["ks_by_n"] = ks_by_n;
    w["reference_dt"] = weak_convergence->reference_dt;
    w["paths_per_level"] = weak_convergence->paths;
    w["threshold"] = weak_convergence->threshold;
    w["decreasing"] = weak_convergence->decreasing;
    j["weak_convergence"] = w;
  }
  if (comparison) {
    nlohmann::ordered_json c;
    c["min_diff"] = comparison->min_diff;
    c["max_diff"] = comparison->max_diff;
    c["mean_diff"] = comparison->mean_diff;
    c["violations"] = comparison->violations;
    c["tolerance"] = comparison->tolerance;
    c["paths"] = comparison->paths;
    j["comparison_stats"] = c;
  }
  if (ou_moments) {
    nlohmann::ordered_json o;
    o["sample_mean"] = ou_moments->sample_mean;
    o["sample_var"] = ou_moments->sample_var;
    o["exact_mean"] = ou_moments->exact_mean;
    o["exact_var"] = ou_moments->exact_var;
    o["se_mean"] = ou_moments->se_mean;
    o["se_var"] = ou_moments->se_var;
    o["z_mean"] = ou_moments->z_mean;
    o["z_var"] = ou_moments->z_var;
    o["paths"] = ou_moments->paths;
    j["ou_moments"] = o;
  }
  nlohmann::ordered_json comp;
  if (complementarity_discrete) comp["discrete_max"] = *complementarity_discrete;
  if (complementarity_sder) comp["sder_max"] = *complementarity_sder;
  if (!comp.empty()) j["complementarity_residuals"] = comp;
  return j.dump(2);
}

}  // namespace tesim::analysis
