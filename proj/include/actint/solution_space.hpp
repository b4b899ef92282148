#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "actint/compiler.hpp"
#include "actint/eval.hpp"
#include "actint/inversion.hpp"
#include "actint/network.hpp"
#include "actint/partition.hpp"

namespace actint {

// ---------------------------------------------------------------------------
// Symmetric solutions

namespace detail {

// Hidden dense layer `layer` and the matrix that reads its output.
struct HiddenPair {
  const DenseActivated* hidden;
  const Matrix* successor;
};

inline HiddenPair hidden_pair(const NetworkSpec& net, std::size_t layer) {
  if (layer + 1 >= net.layers().size())
    throw Error(ErrorKind::Transform, "layer " + std::to_string(layer) + " is not a hidden layer");
  const auto* d = std::get_if<DenseActivated>(&net.layer(layer));
  if (!d) throw Error(ErrorKind::Transform, "layer " + std::to_string(layer) + " is not a dense activated layer");
  if (net.route(layer + 1).is_block()) throw Error(ErrorKind::Transform, "successor does not read the hidden layer");
  const Matrix* next = nullptr;
  if (const auto* nd = std::get_if<DenseActivated>(&net.layer(layer + 1)))
    next = &nd->weights;
  else if (const auto* nl = std::get_if<LinearOnly>(&net.layer(layer + 1)))
    next = &nl->weights;
  if (!next) throw Error(ErrorKind::Transform, "successor of layer " + std::to_string(layer) + " has no weight matrix");
  return {d, next};
}

inline LayerSpec with_weights(const LayerSpec& layer, Matrix w) {
  if (const auto* d = std::get_if<DenseActivated>(&layer)) return DenseActivated{std::move(w), d->activation};
  const auto& l = std::get<LinearOnly>(layer);
  return LinearOnly{std::move(w), l.has_bias};
}

inline NetworkSpec replace_pair(const NetworkSpec& net, std::size_t layer, Matrix hidden, Matrix successor) {
  std::vector<LayerSpec> layers(net.layers().begin(), net.layers().end());
  layers[layer] = DenseActivated{std::move(hidden), std::get<DenseActivated>(layers[layer]).activation};
  layers[layer + 1] = with_weights(layers[layer + 1], std::move(successor));
  return NetworkSpec(net.input_arity(), {net.blocks().begin(), net.blocks().end()}, std::move(layers),
                     {net.routes().begin(), net.routes().end()});
}

}  // namespace detail

/// Reorders the units of hidden layer `layer`: new unit r is old unit perm[r].
/// Rows of the layer and the matching successor columns move together.
inline NetworkSpec permute_layer(const NetworkSpec& net, std::size_t layer, std::span<const std::size_t> perm) {
  const auto pair = detail::hidden_pair(net, layer);
  const Matrix& w = pair.hidden->weights;
  const Matrix& s = *pair.successor;
  const std::size_t n = w.rows();
  if (perm.size() != n) throw Error(ErrorKind::Transform, "permutation length does not match layer width");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw Error(ErrorKind::Transform, "not a permutation");
    seen[p] = true;
  }
  Matrix nw(w.rows(), w.cols());
  Matrix ns(s.rows(), s.cols());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) nw(r, c) = w(perm[r], c);
  }
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) ns(r, c) = s(r, perm[c]);
    for (std::size_t c = n; c < s.cols(); ++c) ns(r, c) = s(r, c);
  }
  return detail::replace_pair(net, layer, std::move(nw), std::move(ns));
}

/// Widths of the dense activated layers that feed another layer.
inline std::vector<std::size_t> hidden_widths(const NetworkSpec& net) {
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i + 1 < net.layers().size(); ++i) {
    if (const auto* d = std::get_if<DenseActivated>(&net.layer(i))) widths.push_back(d->weights.rows());
  }
  return widths;
}

inline BigInt factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

/// prod n_i! over hidden widths.
inline BigInt count_symmetric(const NetworkSpec& net) {
  BigInt total = 1;
  for (std::size_t n : hidden_widths(net)) total *= factorial(n);
  return total;
}

/// prod n_i^n_i over hidden widths. This is the combinatorial count as
/// claimed; solve_cover decides feasibility assignment by assignment.
inline BigInt count_composed_decomposed(const NetworkSpec& net) {
  BigInt total = 1;
  for (std::size_t n : hidden_widths(net)) total *= boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(n));
  return total;
}

// ---------------------------------------------------------------------------
// Composed-decomposed solutions, first type

/// Replaces one hard unit by `parts` clones over the same band, each carrying
/// 1/parts of the outer weight.
inline NetworkSpec split_first_type(const NetworkSpec& net, std::size_t layer, std::size_t unit, std::size_t parts) {
  if (parts < 2) throw Error(ErrorKind::Transform, "split needs at least 2 parts");
  const auto pair = detail::hidden_pair(net, layer);
  if (pair.hidden->activation != Activation::HardLinear)
    throw Error(ErrorKind::UnsupportedSplit, "only hard-linear units split over a shared band");
  const Matrix& w = pair.hidden->weights;
  const Matrix& s = *pair.successor;
  const std::size_t n = w.rows();
  if (unit >= n) throw Error(ErrorKind::Transform, "unit index out of range");

  const std::size_t m = n + parts - 1;
  Matrix nw(m, w.cols());
  std::vector<std::size_t> source(m);
  for (std::size_t r = 0, out = 0; r < n; ++r) {
    const std::size_t copies = r == unit ? parts : 1;
    for (std::size_t k = 0; k < copies; ++k, ++out) source[out] = r;
  }
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) nw(r, c) = w(source[r], c);
  }
  Matrix ns(s.rows(), m + (s.cols() - n));
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double v = s(r, source[c]);
      ns(r, c) = source[c] == unit ? v / static_cast<double>(parts) : v;
    }
    for (std::size_t c = n; c < s.cols(); ++c) ns(r, m + (c - n)) = s(r, c);
  }
  return detail::replace_pair(net, layer, std::move(nw), std::move(ns));
}

// ---------------------------------------------------------------------------
// Composed-decomposed solutions, second type

/// Unit i covers knots [first_knot, last_knot], i.e. base intervals
/// first_knot .. last_knot-1. It must contain its own base interval i.
struct CoverInterval {
  std::size_t first_knot = 0;
  std::size_t last_knot = 0;
  friend bool operator==(const CoverInterval&, const CoverInterval&) = default;
};

using CoverAssign = std::vector<CoverInterval>;

struct CoverSolution {
  NetworkSpec network;
  std::vector<double> slopes;   // uniform slope of each unit over its cover
  std::vector<double> heights;  // slope times cover length
};

/// 0/1 incidence: entry (j, i) is 1 when unit i covers base interval j.
inline Eigen::MatrixXd cover_incidence(const CoverAssign& assign, std::size_t intervals) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(intervals),
                                            static_cast<Eigen::Index>(assign.size()));
  for (std::size_t i = 0; i < assign.size(); ++i) {
    for (std::size_t j = assign[i].first_knot; j < assign[i].last_knot; ++j)
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return a;
}

inline void validate_cover(const CoverAssign& assign, std::size_t intervals) {
  if (assign.size() != intervals)
    throw Error(ErrorKind::InvalidCover, "need one unit per base interval (" + std::to_string(intervals) + ")");
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const auto& c = assign[i];
    if (c.first_knot >= c.last_knot || c.last_knot > intervals)
      throw Error(ErrorKind::InvalidCover, "unit " + std::to_string(i) + " has an empty or out-of-range cover");
    if (c.first_knot > i || c.last_knot < i + 1)
      throw Error(ErrorKind::InvalidCover, "unit " + std::to_string(i) + " does not cover its own base interval");
  }
}

/// Finds per-unit slopes so that the overlapping hard units sum to the chord
/// interpolant of p. Unknowns are unit heights; row j of the system is
/// sum_i A(j,i) * (d_j / L_i) * height_i = rise_j, which has the same rank as
/// the incidence A. Singular systems are reported, never regularized.
inline CoverSolution solve_cover(const Partition& p, const CoverAssign& assign) {
  const std::size_t n = p.intervals();
  validate_cover(assign, n);
  const auto knots = p.knots();
  const Eigen::MatrixXd incidence = cover_incidence(assign, n);
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto ej = static_cast<Eigen::Index>(j);
    rhs(ej) = p.rise(j);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ei = static_cast<Eigen::Index>(i);
      if (incidence(ej, ei) == 0.0) continue;
      const double cover_len = knots[assign[i].last_knot] - knots[assign[i].first_knot];
      const double base_len = p.width(j);
      system(ej, ei) = base_len == cover_len ? 1.0 : base_len / cover_len;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(incidence);
  if (lu.rank() < static_cast<Eigen::Index>(n))
    throw Error(ErrorKind::SingularCover, "incidence matrix has rank " + std::to_string(lu.rank()) + " of " +
                                              std::to_string(n));
  const Eigen::VectorXd heights = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);

  Matrix hidden(n, 2);
  Matrix out(1, n + 1);
  CoverSolution sol{NetworkSpec{}, std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = knots[assign[i].first_knot];
    const double hi = knots[assign[i].last_knot];
    const auto bw = detail::band_weights(lo, hi);
    hidden(i, 0) = bw.slope;
    hidden(i, 1) = bw.bias;
    sol.heights[i] = heights(static_cast<Eigen::Index>(i));
    sol.slopes[i] = sol.heights[i] / (hi - lo);
    out(0, i) = sol.heights[i];
  }
  out(0, n) = p.values().front();
  sol.network = NetworkSpec(1, {DenseActivated{std::move(hidden), Activation::HardLinear}, LinearOnly{std::move(out), true}});
  return sol;
}

/// Assignment where every unit covers exactly its own base interval.
inline CoverAssign identity_cover(std::size_t intervals) {
  CoverAssign a(intervals);
  for (std::size_t i = 0; i < intervals; ++i) a[i] = {i, i + 1};
  return a;
}

// ---------------------------------------------------------------------------
// Equivalence checking

struct EquivalenceReport {
  double max_deviation = 0.0;
  std::size_t sample_count = 0;
  bool equivalent = false;
};

/// max |A(x) - B(x)| over a uniform grid on [lo, hi] plus the kinks of both
/// networks' first hidden layers that fall inside the interval.
inline EquivalenceReport verify_equivalent(const NetworkSpec& a, const NetworkSpec& b, double lo, double hi,
                                           std::size_t samples, double tol) {
  if (a.input_arity() != 1 || b.input_arity() != 1)
    throw Error(ErrorKind::Shape, "equivalence checks compare scalar-input networks");
  if (a.output_size() != b.output_size()) throw Error(ErrorKind::Shape, "output sizes differ");
  if (samples < 2) throw Error(ErrorKind::InvalidInput, "need at least 2 samples");
  if (!(lo < hi)) throw Error(ErrorKind::InvalidInterval, "need lo < hi");
  std::vector<double> xs;
  xs.reserve(samples);
  const double step = (hi - lo) / static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) xs.push_back(k + 1 == samples ? hi : lo + step * static_cast<double>(k));
  for (const auto* net : {&a, &b}) {
    for (double k : hidden_kinks(*net)) {
      if (k >= lo && k <= hi) xs.push_back(k);
    }
  }
  EquivalenceReport rep;
  for (double x : xs) {
    const double in[1] = {x};
    const auto ya = forward(a, in);
    const auto yb = forward(b, in);
    for (std::size_t j = 0; j < ya.size(); ++j) rep.max_deviation = std::max(rep.max_deviation, std::fabs(ya[j] - yb[j]));
  }
  rep.sample_count = xs.size();
  rep.equivalent = rep.max_deviation <= tol;
  return rep;
}

}  // namespace actint
