#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actint/detail/exact_sum.hpp"
#include "actint/eval.hpp"
#include "actint/network.hpp"
#include "actint/partition.hpp"

namespace actint {

/// Functional reading of one hard unit: on [band_lo, band_hi] it rises by
/// `height` at constant `slope`; outside the band it is flat.
struct UnitDescription {
  double band_lo = 0.0;
  double band_hi = 0.0;
  double slope = 0.0;   // k1 * k2
  double height = 0.0;  // signed rise across the band, k2 when k1 > 0
  double offset = 0.0;  // anchor share, carried by the leftmost unit
};

/// Reads bands, slopes and heights back out of a scalar-input hard layer W1
/// (units x 2, bias last) and its read-out row.
inline std::vector<UnitDescription> invert_hard_layer(const Matrix& w1, std::span<const double> w22,
                                                      Activation kind = Activation::HardLinear, double anchor = 0.0) {
  if (kind != Activation::HardLinear) throw Error(ErrorKind::KindMismatch, "inversion expects a hard-linear layer");
  if (w1.cols() != 2) throw Error(ErrorKind::Shape, "inversion expects a scalar-input layer");
  if (w22.size() != w1.rows()) throw Error(ErrorKind::Shape, "read-out row does not match unit count");
  std::vector<UnitDescription> units;
  units.reserve(w1.rows());
  for (std::size_t i = 0; i < w1.rows(); ++i) {
    const double k1 = w1(i, 0);
    const double b = w1(i, 1);
    if (k1 == 0.0) throw Error(ErrorKind::DegenerateUnit, "unit " + std::to_string(i) + " has zero inner slope");
    double lo = (0.0 - b) / k1;
    double hi = (1.0 - b) / k1;
    if (k1 < 0.0) std::swap(lo, hi);
    const double k2 = w22[i];
    units.push_back({lo, hi, k1 * k2, k1 > 0.0 ? k2 : -k2, 0.0});
  }
  std::stable_sort(units.begin(), units.end(), [](const UnitDescription& a, const UnitDescription& b) {
    return a.band_lo < b.band_lo || (a.band_lo == b.band_lo && a.band_hi < b.band_hi);
  });
  if (!units.empty()) units.front().offset = anchor;
  return units;
}

namespace detail {

struct PiecewiseHidden {
  const DenseActivated* hidden;
  const LinearOnly* readout;
};

// Scalar nets of the form [hard|relu dense, single-row linear].
inline std::optional<PiecewiseHidden> as_piecewise_hidden(const NetworkSpec& net) {
  if (net.input_arity() != 1 || net.layers().size() != 2) return std::nullopt;
  if (net.route(0).is_block() || net.route(1).is_block()) return std::nullopt;
  const auto* d = std::get_if<DenseActivated>(&net.layer(0));
  const auto* l = std::get_if<LinearOnly>(&net.layer(1));
  if (!d || !l || l->weights.rows() != 1) return std::nullopt;
  if (d->activation != Activation::HardLinear && d->activation != Activation::Relu) return std::nullopt;
  return PiecewiseHidden{d, l};
}

}  // namespace detail

/// Kink locations of the first hidden layer of a scalar-input network whose
/// first layer is a hard or relu dense layer; empty otherwise.
inline std::vector<double> hidden_kinks(const NetworkSpec& net) {
  std::vector<double> kinks;
  if (net.input_arity() != 1 || net.layers().empty() || net.route(0).is_block()) return kinks;
  const auto* d = std::get_if<DenseActivated>(&net.layer(0));
  if (!d || (d->activation != Activation::HardLinear && d->activation != Activation::Relu)) return kinks;
  for (std::size_t i = 0; i < d->weights.rows(); ++i) {
    const double k1 = d->weights(i, 0);
    const double b = d->weights(i, 1);
    if (k1 == 0.0) continue;
    kinks.push_back(-b / k1);
    if (d->activation == Activation::HardLinear) kinks.push_back((1.0 - b) / k1);
  }
  std::sort(kinks.begin(), kinks.end());
  return kinks;
}

/// Breakpoint/slope form of a scalar network on [lo, hi]. Hard and relu
/// single-hidden-layer networks are reconstructed exactly from their kinks;
/// anything else is sampled at `resolution` uniform points and joined.
inline PiecewiseLinear reconstruct_function(const NetworkSpec& net, double lo, double hi, std::size_t resolution = 1001) {
  if (net.input_arity() != 1 || net.output_size() != 1)
    throw Error(ErrorKind::Shape, "reconstruction needs a scalar-input scalar-output network");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw Error(ErrorKind::InvalidInterval, "need lo < hi");

  if (const auto ph = detail::as_piecewise_hidden(net)) {
    const double merge_tol = 1e-9 * (hi - lo);
    std::vector<double> cuts{lo, hi};
    for (double k : hidden_kinks(net)) {
      if (k > lo && k < hi) cuts.push_back(k);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> bps;
    for (double c : cuts) {
      if (bps.empty() || c - bps.back() > merge_tol) bps.push_back(c);
    }
    if (bps.back() != hi) {
      if (bps.size() > 1 && hi - bps.back() <= merge_tol) bps.back() = hi;
      else bps.push_back(hi);
    }
    const auto& w = ph->hidden->weights;
    const auto& v = ph->readout->weights;
    std::vector<double> slopes(bps.size() - 1);
    for (std::size_t s = 0; s < slopes.size(); ++s) {
      const double mid = 0.5 * (bps[s] + bps[s + 1]);
      detail::ExactSum acc;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double z = w(i, 0) * mid + w(i, 1);
        acc.add(v(0, i) * w(i, 0) * activate_derivative(ph->hidden->activation, z));
      }
      slopes[s] = acc.value();
    }
    return PiecewiseLinear(std::move(bps), std::move(slopes), forward_scalar(net, lo));
  }

  if (resolution < 2) throw Error(ErrorKind::InvalidInput, "resolution must be at least 2");
  std::vector<double> xs(resolution);
  std::vector<double> ys(resolution);
  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  for (std::size_t k = 0; k < resolution; ++k) {
    xs[k] = k + 1 == resolution ? hi : lo + step * static_cast<double>(k);
    ys[k] = forward_scalar(net, xs[k]);
  }
  std::vector<double> slopes(resolution - 1);
  for (std::size_t k = 0; k + 1 < resolution; ++k) slopes[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
  return PiecewiseLinear(std::move(xs), std::move(slopes), ys[0]);
}

/// Image of every unit of every layer as a function of the scalar input,
/// sampled on `resolution` points: images[layer][unit].
inline std::vector<std::vector<PiecewiseLinear>> layer_images(const NetworkSpec& net, double lo, double hi,
                                                              std::size_t resolution, bool pre_activation = false) {
  if (net.input_arity() != 1) throw Error(ErrorKind::Shape, "layer images need a scalar-input network");
  if (!(lo < hi) || resolution < 2) throw Error(ErrorKind::InvalidInput, "need lo < hi and resolution >= 2");
  std::vector<double> xs(resolution);
  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  std::vector<TraceRecord> traces;
  for (std::size_t k = 0; k < resolution; ++k) {
    xs[k] = k + 1 == resolution ? hi : lo + step * static_cast<double>(k);
    const double in[1] = {xs[k]};
    traces.push_back(forward_trace(net, in));
  }
  std::vector<std::vector<PiecewiseLinear>> images;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    std::vector<PiecewiseLinear> units;
    const std::size_t width = traces.front().layers[l].post.size();
    for (std::size_t u = 0; u < width; ++u) {
      std::vector<double> ys(resolution);
      for (std::size_t k = 0; k < resolution; ++k) {
        const auto& lt = traces[k].layers[l];
        ys[k] = pre_activation ? lt.pre[u] : lt.post[u];
      }
      std::vector<double> slopes(resolution - 1);
      for (std::size_t k = 0; k + 1 < resolution; ++k) slopes[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
      units.emplace_back(xs, std::move(slopes), ys[0]);
    }
    images.push_back(std::move(units));
  }
  return images;
}

}  // namespace actint
