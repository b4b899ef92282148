#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "actint/detail/exact_sum.hpp"
#include "actint/network.hpp"

namespace actint {

using BigInt = boost::multiprecision::cpp_int;

/// Per-layer values for one input. `pre` is the affine pre-activation where a
/// layer has one, otherwise it equals `post`.
struct LayerTrace {
  std::size_t layer = 0;
  std::vector<double> pre;
  std::vector<double> post;
};

struct TraceRecord {
  std::vector<LayerTrace> layers;
  std::vector<double> output;
};

namespace detail {

// W(r, :) . [x; 1?] with correctly rounded accumulation.
inline double affine_row(const Matrix& w, std::size_t r, std::span<const double> x, bool bias, double extra = 0.0,
                         bool has_extra = false) {
  ExactSum acc;
  for (std::size_t c = 0; c < x.size(); ++c) acc.add(w(r, c) * x[c]);
  if (bias) acc.add(w(r, x.size()));
  if (has_extra) acc.add(extra);
  return acc.value();
}

inline std::vector<double> run_network(const NetworkSpec& net, std::span<const double> input, TraceRecord* trace);

struct LayerRunner {
  const NetworkSpec& net;
  std::size_t index;
  std::span<const double> input;    // whole network input
  std::span<const double> primary;  // routed primary input
  std::span<const double> previous; // previous layer output (empty for layer 0)
  LayerTrace& out;

  void operator()(const DenseActivated& l) const {
    const std::size_t n = l.weights.rows();
    out.pre.resize(n);
    out.post.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      out.pre[r] = affine_row(l.weights, r, primary, true);
      out.post[r] = activate(l.activation, out.pre[r]);
    }
  }
  void operator()(const LinearOnly& l) const {
    const std::size_t n = l.weights.rows();
    out.pre.resize(n);
    for (std::size_t r = 0; r < n; ++r) out.pre[r] = affine_row(l.weights, r, primary, l.has_bias);
    out.post = out.pre;
  }
  void operator()(const SharedWeight& l) const {
    const std::size_t n = shared_output_width(primary.size(), l.kernel.size(), l.stride);
    out.pre.resize(n);
    out.post.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      ExactSum acc;
      for (std::size_t j = 0; j < l.kernel.size(); ++j) acc.add(l.kernel[j] * primary[k * l.stride + j]);
      out.pre[k] = acc.value();
      out.post[k] = l.activation ? activate(*l.activation, out.pre[k]) : out.pre[k];
    }
  }
  void operator()(const RecurrentStep& l) const {
    const std::size_t n = l.input_weights.rows();
    out.pre.resize(n);
    out.post.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double carried = previous.empty() ? 0.0 : l.state_weight * previous[r];
      out.pre[r] = affine_row(l.input_weights, r, primary, true, carried, !previous.empty());
      out.post[r] = l.activation ? activate(*l.activation, out.pre[r]) : out.pre[r];
    }
  }
  void operator()(const Residual& l) const {
    const auto inner_in = index == 0 ? input : previous;
    out.pre = run_network(*l.inner, inner_in, nullptr);
    out.post.resize(out.pre.size());
    for (std::size_t j = 0; j < out.pre.size(); ++j) out.post[j] = out.pre[j] + primary[j];
  }
  void operator()(const Combine& l) const {
    double v = 0.0;
    if (l.mode == CombineMode::Sum) {
      v = exact_sum(primary);
    } else {
      v = 1.0;
      for (double s : primary) v *= s;
    }
    out.pre = {v};
    out.post = {v};
  }
};

inline std::vector<double> run_network(const NetworkSpec& net, std::span<const double> input, TraceRecord* trace) {
  if (input.size() != net.input_arity())
    throw Error(ErrorKind::Shape, "input has " + std::to_string(input.size()) + " values, network expects " +
                                      std::to_string(net.input_arity()));
  for (double v : input) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite network input");
  }
  std::vector<double> prev;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Route& r = net.route(i);
    std::span<const double> primary =
        r.is_block() ? input.subspan(net.block_offset(r.block), net.blocks()[r.block])
                     : (i == 0 ? input : std::span<const double>(prev));
    LayerTrace lt;
    lt.layer = i;
    std::visit(LayerRunner{net, i, input, primary, std::span<const double>(prev), lt}, net.layer(i));
    for (double v : lt.post) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NumericOverflow, "non-finite value at layer " + std::to_string(i));
    }
    prev = lt.post;
    if (trace) trace->layers.push_back(std::move(lt));
  }
  if (net.layers().empty()) prev.assign(input.begin(), input.end());
  return prev;
}

}  // namespace detail

inline std::vector<double> forward(const NetworkSpec& net, std::span<const double> input) {
  return detail::run_network(net, input, nullptr);
}

inline double forward_scalar(const NetworkSpec& net, double x) {
  const double in[1] = {x};
  const auto out = forward(net, in);
  if (out.size() != 1) throw Error(ErrorKind::Shape, "network output is not scalar");
  return out[0];
}

inline TraceRecord forward_trace(const NetworkSpec& net, std::span<const double> input) {
  TraceRecord rec;
  rec.output = detail::run_network(net, input, &rec);
  return rec;
}

namespace detail {

// Composition B o A of two linear layers, keeping a bias column if either has one.
inline LinearOnly compose_linear(const LinearOnly& a, const LinearOnly& b) {
  const std::size_t in = a.weights.cols() - (a.has_bias ? 1 : 0);
  const std::size_t mid = a.weights.rows();
  const std::size_t out = b.weights.rows();
  const bool bias = a.has_bias || b.has_bias;
  Matrix w(out, in + (bias ? 1 : 0));
  for (std::size_t r = 0; r < out; ++r) {
    for (std::size_t c = 0; c < in; ++c) {
      ExactSum acc;
      for (std::size_t k = 0; k < mid; ++k) acc.add(b.weights(r, k) * a.weights(k, c));
      w(r, c) = acc.value();
    }
    if (bias) {
      ExactSum acc;
      if (a.has_bias)
        for (std::size_t k = 0; k < mid; ++k) acc.add(b.weights(r, k) * a.weights(k, in));
      if (b.has_bias) acc.add(b.weights(r, mid));
      w(r, in) = acc.value();
    }
  }
  return LinearOnly{std::move(w), bias};
}

}  // namespace detail

/// Replaces every maximal run of consecutive linear layers by their product.
/// A run continues only through layers that read the previous output.
inline NetworkSpec collapse_linear(const NetworkSpec& net) {
  std::vector<LayerSpec> layers;
  std::vector<Route> routes;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layer(i);
    const auto& route = net.route(i);
    if (const auto* lin = std::get_if<LinearOnly>(&layer)) {
      if (!layers.empty() && !route.is_block()) {
        if (auto* last = std::get_if<LinearOnly>(&layers.back())) {
          *last = detail::compose_linear(*last, *lin);
          continue;
        }
      }
    }
    if (const auto* res = std::get_if<Residual>(&layer)) {
      layers.push_back(make_residual(collapse_linear(*res->inner)));
    } else {
      layers.push_back(layer);
    }
    routes.push_back(route);
  }
  return NetworkSpec(net.input_arity(), {net.blocks().begin(), net.blocks().end()}, std::move(layers),
                     std::move(routes));
}

/// Number of distinct weight paths through consecutive linear layers from
/// `first` to `last` inclusive: input width times every layer's row count.
inline BigInt count_linear_paths(const NetworkSpec& net, std::size_t first, std::size_t last) {
  if (first > last || last >= net.layers().size()) throw Error(ErrorKind::Shape, "invalid layer range");
  BigInt paths = net.shapes()[first].in;
  for (std::size_t i = first; i <= last; ++i) {
    const auto* lin = std::get_if<LinearOnly>(&net.layer(i));
    if (!lin) throw Error(ErrorKind::Shape, "layer " + std::to_string(i) + " is not linear");
    paths *= lin->weights.rows();
  }
  return paths;
}

/// Banded matrix with the kernel repeated along the band, one row per window.
inline LayerSpec conv_to_dense(const SharedWeight& layer, std::size_t width) {
  if (layer.kernel.empty()) throw Error(ErrorKind::Shape, "empty kernel");
  if (layer.stride == 0) throw Error(ErrorKind::Shape, "stride must be positive");
  if (layer.kernel.size() > width) throw Error(ErrorKind::Shape, "kernel longer than input");
  const std::size_t rows = shared_output_width(width, layer.kernel.size(), layer.stride);
  const bool act = layer.activation.has_value();
  Matrix w(rows, width + (act ? 1 : 0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < layer.kernel.size(); ++j) w(r, r * layer.stride + j) = layer.kernel[j];
  }
  if (act) return DenseActivated{std::move(w), *layer.activation};
  return LinearOnly{std::move(w), false};
}

/// Network with every shared-weight layer replaced by its dense expansion.
inline NetworkSpec expand_shared(const NetworkSpec& net) {
  std::vector<LayerSpec> layers(net.layers().begin(), net.layers().end());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* s = std::get_if<SharedWeight>(&layers[i])) layers[i] = conv_to_dense(*s, net.shapes()[i].in);
  }
  return NetworkSpec(net.input_arity(), {net.blocks().begin(), net.blocks().end()}, std::move(layers),
                     {net.routes().begin(), net.routes().end()});
}

enum class Variate { Univariate, PseudoMultivariate, Multivariate };
enum class Linearity { LinearANN, NonlinearANN };

struct Classification {
  Variate variate = Variate::Univariate;
  Linearity linearity = Linearity::LinearANN;
  friend bool operator==(const Classification&, const Classification&) = default;
};

inline std::string_view to_string(Variate v) noexcept {
  switch (v) {
    case Variate::Univariate: return "univariate";
    case Variate::PseudoMultivariate: return "pseudo-multivariate";
    case Variate::Multivariate: return "multivariate";
  }
  return "unknown";
}

inline std::string_view to_string(Linearity l) noexcept {
  return l == Linearity::LinearANN ? "linear" : "nonlinear";
}

inline bool has_product(const NetworkSpec& net) {
  for (const auto& layer : net.layers()) {
    if (const auto* c = std::get_if<Combine>(&layer); c && c->mode == CombineMode::Product) return true;
    if (const auto* r = std::get_if<Residual>(&layer); r && has_product(*r->inner)) return true;
  }
  return false;
}

/// Composite depth counts activation-bearing layers before the point where a
/// block enters. Blocks entering only at depth 0, once each, are reducible to a
/// single variable; any later or repeated entry makes the network multivariate.
inline Classification classify(const NetworkSpec& net) {
  struct Use {
    std::size_t count = 0;
    std::size_t max_depth = 0;
  };
  std::vector<Use> uses(net.blocks().size());
  auto consume = [&](std::size_t k, std::size_t depth) {
    ++uses[k].count;
    uses[k].max_depth = std::max(uses[k].max_depth, depth);
  };
  auto consume_all = [&](std::size_t depth) {
    for (std::size_t k = 0; k < uses.size(); ++k) consume(k, depth);
  };

  std::size_t depth = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& layer = net.layer(i);
    const auto& route = net.route(i);
    if (const auto* res = std::get_if<Residual>(&layer)) {
      if (i == 0) consume_all(0);
      depth += activation_depth(*res->inner);
      consume(route.block, depth);
      continue;
    }
    if (route.is_block())
      consume(route.block, depth);
    else if (i == 0)
      consume_all(0);
    if (is_activation_bearing(layer)) ++depth;
  }
  if (net.layers().empty()) consume_all(0);

  Classification c;
  bool multi = false;
  for (const auto& u : uses) {
    if (u.count > 1 || u.max_depth > 0) multi = true;
  }
  if (multi)
    c.variate = Variate::Multivariate;
  else if (uses.size() > 1)
    c.variate = Variate::PseudoMultivariate;
  c.linearity = has_product(net) ? Linearity::NonlinearANN : Linearity::LinearANN;
  return c;
}

}  // namespace actint
