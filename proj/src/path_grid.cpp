#include "tesim/path_grid.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace tesim {

std::string format_float(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double PathGrid::x_at(double t) const {
  if (x.empty()) throw std::out_of_range("PathGrid: empty path");
  const double horizon_t = horizon();
  if (t < -1e-9 * dt || t > horizon_t + 1e-9 * dt) {
    throw std::out_of_range("PathGrid: time beyond the grid");
  }
  if (t <= 0.0) return x.front();
  if (t >= horizon_t) return x.back();
  const double u = t / dt;
  const std::size_t k = static_cast<std::size_t>(std::floor(u));
  if (interp == Interp::Step) return x[k];
  const double frac = u - static_cast<double>(k);
  return (1.0 - frac) * x[k] + frac * x[k + 1];
}

void PathGrid::write_csv_header(std::ostream& os, bool with_path_id) const {
  if (with_path_id) os << "path,";
  os << "time,X";
  for (int i = 0; i < n_positions(); ++i) os << ',' << position_label << (i + 1);
  const int n1 = n_regulators();
  for (int i = 0; i < n1; ++i) os << ',' << regulator_label << (i + 1);
  os << '\n';
}

void PathGrid::write_csv_rows(std::ostream& os, long path_id, bool with_path_id) const {
  const Eigen::MatrixXd& reg = reporting_regulator();
  for (std::size_t k = 0; k < points(); ++k) {
    if (with_path_id) os << path_id << ',';
    os << format_float(time_at(k)) << ',' << format_float(x[k]);
    for (int i = 0; i < n_positions(); ++i) {
      os << ',' << format_float(positions(static_cast<Eigen::Index>(k), i));
    }
    for (int i = 0; i < reg.cols(); ++i) {
      os << ',' << format_float(reg(static_cast<Eigen::Index>(k), i));
    }
    os << '\n';
  }
}

void PathGrid::write_csv(std::ostream& os) const {
  write_csv_header(os, false);
  write_csv_rows(os, 0, false);
}

}  // namespace tesim
