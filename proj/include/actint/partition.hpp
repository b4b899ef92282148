#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actint/error.hpp"

namespace actint {

/// Ordered knots with the target values sampled on them. Immutable once built;
/// downstream operations see only the samples, never the function handle.
class Partition {
 public:
  /// Validates m >= 2, strictly increasing finite knots and finite values. The
  /// uniform flag is checked against a relative spacing tolerance of 1e-12.
  Partition(std::vector<double> knots, std::vector<double> values, bool uniform = false)
      : knots_(std::move(knots)), values_(std::move(values)), uniform_(uniform) {
    if (knots_.size() != values_.size())
      throw Error(ErrorKind::InvalidPartition, "knot and value counts differ");
    if (knots_.size() < 2) throw Error(ErrorKind::TooFewKnots, "a partition needs at least 2 knots");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (!std::isfinite(knots_[i])) throw Error(ErrorKind::InvalidPartition, "non-finite knot");
      if (!std::isfinite(values_[i]))
        throw Error(ErrorKind::NonFiniteSample, "non-finite value at knot " + std::to_string(i));
      if (i > 0 && !(knots_[i] > knots_[i - 1]))
        throw Error(ErrorKind::InvalidPartition,
                    "knots must be strictly increasing (index " + std::to_string(i) + ")");
    }
    if (uniform_) {
      const double h0 = knots_[1] - knots_[0];
      const double tol = 1e-12 * (knots_.back() - knots_.front());
      for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
        if (std::fabs((knots_[i + 1] - knots_[i]) - h0) > tol)
          throw Error(ErrorKind::InvalidPartition, "uniform flag set on non-uniform knots");
      }
    }
  }

  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> values() const noexcept { return values_; }
  bool uniform() const noexcept { return uniform_; }
  std::size_t size() const noexcept { return knots_.size(); }
  std::size_t intervals() const noexcept { return knots_.size() - 1; }

  double lo() const noexcept { return knots_.front(); }
  double hi() const noexcept { return knots_.back(); }

  double width(std::size_t i) const noexcept { return knots_[i + 1] - knots_[i]; }
  /// Outer height of interval i, F(x_{i+1}) - F(x_i).
  double rise(std::size_t i) const noexcept { return values_[i + 1] - values_[i]; }
  double chord_slope(std::size_t i) const noexcept { return rise(i) / width(i); }

  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  bool uniform_;
};

using ScalarFunction = std::function<double(double)>;

inline Partition uniform_partition(double a, double b, std::size_t m, const ScalarFunction& f) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
    throw Error(ErrorKind::InvalidInterval, "domain must satisfy a < b");
  if (m < 2) throw Error(ErrorKind::TooFewKnots, "uniform partition needs m >= 2");
  std::vector<double> knots(m);
  std::vector<double> values(m);
  const double step = (b - a) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    knots[i] = (i + 1 == m) ? b : a + step * static_cast<double>(i);
    values[i] = f(knots[i]);
    if (!std::isfinite(values[i]))
      throw Error(ErrorKind::NonFiniteSample, "F(" + std::to_string(knots[i]) + ") is not finite");
  }
  return Partition(std::move(knots), std::move(values), true);
}

/// Chord interpolant of the partition, clamped to the boundary values outside
/// [x_1, x_m]. Returns F(x_i) exactly at every knot.
inline double interpolant_eval(const Partition& p, double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "non-finite evaluation point");
  const auto knots = p.knots();
  const auto values = p.values();
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const auto i = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double t = (x - knots[i]) / (knots[i + 1] - knots[i]);
  return std::lerp(values[i], values[i + 1], t);
}

/// Continuous breakpoint/slope representation of a scalar function. Extension
/// slopes on both sides are zero, so evaluation clamps to the end values.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> slopes, double anchor)
      : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), anchor_(anchor) {
    if (breakpoints_.empty()) throw Error(ErrorKind::InvalidInput, "piecewise-linear needs a breakpoint");
    if (slopes_.size() + 1 != breakpoints_.size())
      throw Error(ErrorKind::InvalidInput, "need exactly one slope per segment");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > breakpoints_[i - 1]))
        throw Error(ErrorKind::InvalidInput, "breakpoints must be strictly increasing");
    }
    node_values_.resize(breakpoints_.size());
    node_values_[0] = anchor_;
    for (std::size_t i = 0; i < slopes_.size(); ++i)
      node_values_[i + 1] = node_values_[i] + slopes_[i] * (breakpoints_[i + 1] - breakpoints_[i]);
  }

  static PiecewiseLinear from_partition(const Partition& p) {
    std::vector<double> slopes(p.intervals());
    for (std::size_t i = 0; i < slopes.size(); ++i) slopes[i] = p.chord_slope(i);
    return PiecewiseLinear({p.knots().begin(), p.knots().end()}, std::move(slopes), p.values().front());
  }

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> slopes() const noexcept { return slopes_; }
  std::span<const double> node_values() const noexcept { return node_values_; }
  double anchor() const noexcept { return anchor_; }

  double operator()(double x) const {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "non-finite evaluation point");
    if (x <= breakpoints_.front()) return node_values_.front();
    if (x >= breakpoints_.back()) return node_values_.back();
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    const auto i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return node_values_[i] + slopes_[i] * (x - breakpoints_[i]);
  }

  friend bool operator==(const PiecewiseLinear& a, const PiecewiseLinear& b) {
    return a.breakpoints_ == b.breakpoints_ && a.slopes_ == b.slopes_ && a.anchor_ == b.anchor_;
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  double anchor_;
  std::vector<double> node_values_;
};

}  // namespace actint
