#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tesim {

enum class Interp { Linear, Step };

/// Scalar path sampled on the uniform grid {0, dt, 2 dt, ...}. Values between
/// grid points come from either linear interpolation or the left-constant
/// step rule.
class GridPath {
 public:
  GridPath() = default;

  GridPath(double dt, double x0, Interp mode = Interp::Linear)
      : dt_(dt), mode_(mode), values_{x0} {
    if (!(dt > 0.0)) throw std::invalid_argument("GridPath: dt must be positive");
  }

  void reserve(std::size_t points) { values_.reserve(points); }
  void push_back(double value) { values_.push_back(value); }

  double dt() const { return dt_; }
  Interp mode() const { return mode_; }
  std::size_t points() const { return values_.size(); }
  std::size_t steps() const { return values_.empty() ? 0 : values_.size() - 1; }
  double end_time() const { return dt_ * static_cast<double>(steps()); }
  double back() const { return values_.back(); }
  const std::vector<double>& values() const { return values_; }

  double at_step(std::size_t k) const {
    if (k >= values_.size()) {
      throw std::out_of_range("GridPath: step index beyond the recorded path");
    }
    return values_[k];
  }

  double at(double t) const {
    const double slack = 1e-9 * dt_;
    if (t < -slack || t > end_time() + slack) {
      throw std::out_of_range("GridPath: time beyond the recorded path");
    }
    if (t <= 0.0) return values_.front();
    if (t >= end_time()) return values_.back();
    const double u = t / dt_;
    const std::size_t k = static_cast<std::size_t>(std::floor(u));
    if (mode_ == Interp::Step) return values_[k];
    const double frac = u - static_cast<double>(k);
    return (1.0 - frac) * values_[k] + frac * values_[k + 1];
  }

 private:
  double dt_ = 1.0;
  Interp mode_ = Interp::Linear;
  std::vector<double> values_;
};

}  // namespace tesim
