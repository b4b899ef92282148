#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actint/activation.hpp"
#include "actint/detail/exact_sum.hpp"
#include "actint/network.hpp"
#include "actint/partition.hpp"

namespace actint {

/// How smooth units stand in for the hard clamp on each interval.
///   HeightMatched: centered at the interval midpoint, steepness 4/h (sigmoid)
///     or 2/h (tanh), asymptotes equal to the interval's rise.
///   Literal: the per-unit forms 4*rise*sigmoid((x - x_i)/h) and
///     (rise*tanh((x - x_i)/h) + 1)/2, kept for fidelity checks.
enum class SmoothMode { HeightMatched, Literal };

/// Weight solution of the standard discrete activation integral between two
/// layers: W1 holds the inner slopes (replicated across input columns) and the
/// bias weights, W22 the interval rises, and offset the anchor F(x_1).
struct WeightMatrices {
  Matrix w1;
  Matrix w22;
  double offset = 0.0;
};

namespace detail {

// Inner weights placing the hard band [0,1] exactly on [lo, hi].
struct BandWeights {
  double slope;
  double bias;
};

inline BandWeights band_weights(double lo, double hi) {
  const double h = hi - lo;
  return {1.0 / h, (0.0 - lo) / h};
}

}  // namespace detail

inline WeightMatrices weight_matrices(const Partition& p, std::size_t inputs = 1, std::size_t outputs = 1) {
  if (inputs == 0 || outputs == 0) throw Error(ErrorKind::Shape, "weight matrices need inputs and outputs");
  const std::size_t units = p.intervals();
  WeightMatrices wm{Matrix(units, inputs + 1), Matrix(outputs, units), p.values().front()};
  for (std::size_t i = 0; i < units; ++i) {
    const auto bw = detail::band_weights(p.knots()[i], p.knots()[i + 1]);
    for (std::size_t c = 0; c < inputs; ++c) wm.w1(i, c) = bw.slope;
    wm.w1(i, inputs) = bw.bias;
    for (std::size_t r = 0; r < outputs; ++r) wm.w22(r, i) = p.rise(i);
  }
  return wm;
}

/// Rank-one merged form: entry (i, j) = rise_j / (x_{i+1} - x_i).
inline Matrix merged_matrix(const WeightMatrices& wm) {
  const std::size_t units = wm.w1.rows();
  Matrix m(units, units);
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t j = 0; j < units; ++j) m(i, j) = wm.w22(0, j) * wm.w1(i, 0);
  }
  return m;
}

/// Direct evaluation of offset + W22 clamp(W1 [x; 1]) for scalar input.
inline double evaluate_matrices(const WeightMatrices& wm, double x) {
  detail::ExactSum acc;
  acc.add(wm.offset);
  for (std::size_t i = 0; i < wm.w1.rows(); ++i) {
    detail::ExactSum z;
    z.add(wm.w1(i, 0) * x);
    z.add(wm.w1(i, 1));
    acc.add(wm.w22(0, i) * std::clamp(z.value(), 0.0, 1.0));
  }
  return acc.value();
}

/// Hard hidden layer plus a linear read-out whose bias column carries the anchor.
inline NetworkSpec network_from_matrices(const WeightMatrices& wm) {
  const std::size_t outputs = wm.w22.rows();
  const std::size_t units = wm.w22.cols();
  Matrix out(outputs, units + 1);
  for (std::size_t r = 0; r < outputs; ++r) {
    for (std::size_t i = 0; i < units; ++i) out(r, i) = wm.w22(r, i);
    out(r, units) = wm.offset;
  }
  return NetworkSpec(wm.w1.cols() - 1, {DenseActivated{wm.w1, Activation::HardLinear}, LinearOnly{std::move(out), true}});
}

namespace detail {

inline std::vector<LayerSpec> scalar_layers(const Partition& p, Activation kind, SmoothMode mode) {
  const std::size_t units = p.intervals();
  if (kind == Activation::HardLinear) {
    auto net = network_from_matrices(weight_matrices(p));
    return {net.layers().begin(), net.layers().end()};
  }
  if (kind == Activation::Relu) {
    Matrix hidden(2 * units, 2);
    Matrix out(1, 2 * units + 1);
    for (std::size_t i = 0; i < units; ++i) {
      const auto bw = band_weights(p.knots()[i], p.knots()[i + 1]);
      hidden(2 * i, 0) = bw.slope;
      hidden(2 * i, 1) = bw.bias;
      hidden(2 * i + 1, 0) = bw.slope;
      hidden(2 * i + 1, 1) = bw.bias - 1.0;
      out(0, 2 * i) = p.rise(i);
      out(0, 2 * i + 1) = -p.rise(i);
    }
    out(0, 2 * units) = p.values().front();
    return {DenseActivated{std::move(hidden), kind}, LinearOnly{std::move(out), true}};
  }

  Matrix hidden(units, 2);
  Matrix out(1, units + 1);
  ExactSum bias;
  bias.add(p.values().front());
  for (std::size_t i = 0; i < units; ++i) {
    const double lo = p.knots()[i];
    const double h = p.width(i);
    const double rise = p.rise(i);
    if (mode == SmoothMode::HeightMatched) {
      const double mid = lo + 0.5 * h;
      const double steep = (kind == Activation::Sigmoid ? 4.0 : 2.0) / h;
      hidden(i, 0) = steep;
      hidden(i, 1) = -steep * mid;
      if (kind == Activation::Sigmoid) {
        out(0, i) = rise;
      } else {
        out(0, i) = 0.5 * rise;
        bias.add(0.5 * rise);
      }
    } else {
      hidden(i, 0) = 1.0 / h;
      hidden(i, 1) = -lo / h;
      if (kind == Activation::Sigmoid) {
        out(0, i) = 4.0 * rise;
      } else {
        out(0, i) = 0.5 * rise;
        bias.add(0.5);
      }
    }
  }
  out(0, units) = bias.value();
  return {DenseActivated{std::move(hidden), kind}, LinearOnly{std::move(out), true}};
}

}  // namespace detail

/// One hidden layer realizing the standard discrete activation integral of the
/// partition (2 units per interval for relu), read out by a linear row.
inline NetworkSpec compile_scalar(const Partition& p, Activation kind, SmoothMode mode = SmoothMode::HeightMatched) {
  return NetworkSpec(1, detail::scalar_layers(p, kind, mode));
}

struct CompositeStage {
  Partition partition;
  Activation kind = Activation::HardLinear;
};

/// Stacks the stage networks so the result realizes F_n(...F_1(x)...). Each
/// stage's value range must lie inside the next stage's knot span.
inline NetworkSpec compile_composite(std::span<const CompositeStage> stages,
                                     SmoothMode mode = SmoothMode::HeightMatched) {
  if (stages.empty()) throw Error(ErrorKind::InvalidInput, "composite needs at least one stage");
  std::vector<LayerSpec> layers;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (s + 1 < stages.size()) {
      const auto& cur = stages[s].partition;
      const auto& next = stages[s + 1].partition;
      if (cur.min_value() < next.lo() || cur.max_value() > next.hi())
        throw Error(ErrorKind::StageDomain,
                    "stage " + std::to_string(s + 1) + " range [" + std::to_string(cur.min_value()) + ", " +
                        std::to_string(cur.max_value()) + "] leaves the knot span of stage " + std::to_string(s + 2));
    }
    auto part = detail::scalar_layers(stages[s].partition, stages[s].kind, mode);
    layers.insert(layers.end(), part.begin(), part.end());
  }
  return NetworkSpec(1, std::move(layers));
}

/// Weights of the injective linear code z = sum_k w_k i_k over an integer grid.
class LinearizerWeights {
 public:
  /// Exhaustively checks that the weights separate every grid point.
  LinearizerWeights(std::vector<double> weights, std::vector<std::size_t> extents)
      : weights_(std::move(weights)), extents_(std::move(extents)) {
    if (extents_.empty()) throw Error(ErrorKind::InvalidGrid, "grid needs at least one dimension");
    if (weights_.size() != extents_.size()) throw Error(ErrorKind::InvalidGrid, "one weight per dimension");
    for (std::size_t e : extents_) {
      if (e == 0) throw Error(ErrorKind::InvalidGrid, "zero grid extent");
    }
    std::vector<double> codes;
    for_each_point([&](std::span<const std::size_t> idx) { codes.push_back(code(idx)); });
    std::sort(codes.begin(), codes.end());
    if (std::adjacent_find(codes.begin(), codes.end()) != codes.end())
      throw Error(ErrorKind::LinearizerCollision, "linearizer maps two grid points to one code");
  }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::size_t> extents() const noexcept { return extents_; }

  std::size_t grid_size() const {
    std::size_t n = 1;
    for (std::size_t e : extents_) n *= e;
    return n;
  }

  double code(std::span<const std::size_t> idx) const {
    detail::ExactSum acc;
    for (std::size_t k = 0; k < idx.size(); ++k) acc.add(weights_[k] * static_cast<double>(idx[k]));
    return acc.value();
  }

  /// Visits grid points with the first coordinate varying fastest.
  template <class F>
  void for_each_point(F&& f) const {
    std::vector<std::size_t> idx(extents_.size(), 0);
    const std::size_t total = grid_size();
    for (std::size_t n = 0; n < total; ++n) {
      f(std::span<const std::size_t>(idx));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (++idx[k] < extents_[k]) break;
        idx[k] = 0;
      }
    }
  }

 private:
  std::vector<double> weights_;
  std::vector<std::size_t> extents_;
};

/// Mixed-radix weights w_k = prod_{j<k} extent_j.
inline LinearizerWeights linearize_grid(std::span<const std::size_t> extents) {
  if (extents.empty()) throw Error(ErrorKind::InvalidGrid, "grid needs at least one dimension");
  std::vector<double> w(extents.size());
  double radix = 1.0;
  for (std::size_t k = 0; k < extents.size(); ++k) {
    if (extents[k] == 0) throw Error(ErrorKind::InvalidGrid, "zero grid extent");
    w[k] = radix;
    radix *= static_cast<double>(extents[k]);
  }
  return LinearizerWeights(std::move(w), {extents.begin(), extents.end()});
}

using GridSamples = std::map<std::vector<std::size_t>, double>;

/// Partition induced on the code axis: codes ascending, values the samples.
inline Partition induced_partition(const GridSamples& samples, const LinearizerWeights& lin) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(lin.grid_size());
  lin.for_each_point([&](std::span<const std::size_t> idx) {
    const auto it = samples.find(std::vector<std::size_t>(idx.begin(), idx.end()));
    if (it == samples.end()) {
      std::string where;
      for (std::size_t v : idx) where += (where.empty() ? "" : ",") + std::to_string(v);
      throw Error(ErrorKind::IncompleteGrid, "missing grid point (" + where + ")");
    }
    pts.emplace_back(lin.code(idx), it->second);
  });
  if (samples.size() != pts.size()) throw Error(ErrorKind::InvalidGrid, "samples outside the declared grid");
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].first == pts[i - 1].first) throw Error(ErrorKind::LinearizerCollision, "duplicate code");
  }
  std::vector<double> knots;
  std::vector<double> values;
  for (const auto& [z, v] : pts) {
    knots.push_back(z);
    values.push_back(v);
  }
  return Partition(std::move(knots), std::move(values));
}

/// Linear code layer followed by the scalar compilation of the induced partition.
inline NetworkSpec compile_multivariate(const GridSamples& samples, const LinearizerWeights& lin, Activation kind,
                                        SmoothMode mode = SmoothMode::HeightMatched) {
  const std::size_t n = lin.extents().size();
  if (lin.grid_size() < 2) throw Error(ErrorKind::TooFewKnots, "grid needs at least 2 points");
  const Partition induced = induced_partition(samples, lin);
  std::vector<LayerSpec> layers;
  layers.emplace_back(LinearOnly{Matrix(1, n, {lin.weights().begin(), lin.weights().end()}), false});
  auto scalar = detail::scalar_layers(induced, kind, mode);
  layers.insert(layers.end(), scalar.begin(), scalar.end());
  return NetworkSpec(n, std::move(layers));
}

}  // namespace actint
