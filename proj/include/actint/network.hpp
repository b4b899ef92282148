#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "actint/activation.hpp"
#include "actint/error.hpp"

namespace actint {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw Error(ErrorKind::Shape, "matrix data size does not match " + std::to_string(rows_) + "x" +
                                        std::to_string(cols_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class NetworkSpec;

/// act(W [x; 1]); the last column of W is the bias weight on a constant input.
struct DenseActivated {
  Matrix weights;
  Activation activation;
  friend bool operator==(const DenseActivated&, const DenseActivated&) = default;
};

/// W x, or W [x; 1] when has_bias is set.
struct LinearOnly {
  Matrix weights;
  bool has_bias = false;
  friend bool operator==(const LinearOnly&, const LinearOnly&) = default;
};

/// 1-D sliding window with one kernel shared by every output position.
struct SharedWeight {
  std::vector<double> kernel;
  std::size_t stride = 1;
  std::optional<Activation> activation;
  friend bool operator==(const SharedWeight&, const SharedWeight&) = default;
};

/// s' = act(state_weight * s + W [X_k; 1]); s is the previous layer output (zeros
/// for the first layer) and X_k the routed input block.
struct RecurrentStep {
  double state_weight = 1.0;
  Matrix input_weights;
  std::optional<Activation> activation;
  friend bool operator==(const RecurrentStep&, const RecurrentStep&) = default;
};

/// inner(s) + X_k: the skip adds the routed input block after the inner network.
struct Residual {
  std::shared_ptr<const NetworkSpec> inner;
  friend bool operator==(const Residual& a, const Residual& b);
};

enum class CombineMode { Sum, Product };

/// Reduces the previous output vector to a scalar; only valid as the last layer.
struct Combine {
  CombineMode mode = CombineMode::Sum;
  friend bool operator==(const Combine&, const Combine&) = default;
};

using LayerSpec = std::variant<DenseActivated, LinearOnly, SharedWeight, RecurrentStep, Residual, Combine>;

/// Where a layer reads its primary input from. Previous means the output of the
/// layer before it (the whole network input for layer 0).
struct Route {
  enum class Source { Previous, Block };
  Source source = Source::Previous;
  std::size_t block = 0;

  static Route previous() { return {}; }
  static Route from_block(std::size_t k) { return {Source::Block, k}; }
  bool is_block() const noexcept { return source == Source::Block; }
  friend bool operator==(const Route&, const Route&) = default;
};

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
};

class NetworkSpec {
 public:
  NetworkSpec() = default;

  /// Single-block network where every layer reads the previous output.
  NetworkSpec(std::size_t input_arity, std::vector<LayerSpec> layers)
      : NetworkSpec(input_arity, {input_arity}, std::move(layers), {}) {}

  NetworkSpec(std::size_t input_arity, std::vector<std::size_t> blocks, std::vector<LayerSpec> layers,
              std::vector<Route> routes)
      : input_arity_(input_arity), blocks_(std::move(blocks)), layers_(std::move(layers)), routes_(std::move(routes)) {
    if (routes_.empty()) routes_.assign(layers_.size(), Route::previous());
    validate();
  }

  std::size_t input_arity() const noexcept { return input_arity_; }
  std::span<const std::size_t> blocks() const noexcept { return blocks_; }
  std::span<const LayerSpec> layers() const noexcept { return layers_; }
  std::span<const Route> routes() const noexcept { return routes_; }
  std::span<const LayerShape> shapes() const noexcept { return shapes_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const Route& route(std::size_t i) const { return routes_.at(i); }
  std::size_t output_size() const noexcept { return layers_.empty() ? input_arity_ : shapes_.back().out; }

  std::size_t block_offset(std::size_t k) const {
    std::size_t off = 0;
    for (std::size_t j = 0; j < k; ++j) off += blocks_[j];
    return off;
  }

  /// Copy with layer i replaced, revalidated.
  NetworkSpec with_layer(std::size_t i, LayerSpec layer) const {
    auto layers = layers_;
    layers.at(i) = std::move(layer);
    return NetworkSpec(input_arity_, blocks_, std::move(layers), routes_);
  }

  friend bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    return a.input_arity_ == b.input_arity_ && a.blocks_ == b.blocks_ && a.layers_ == b.layers_ &&
           a.routes_ == b.routes_;
  }

 private:
  void validate();

  std::size_t input_arity_ = 0;
  std::vector<std::size_t> blocks_;
  std::vector<LayerSpec> layers_;
  std::vector<Route> routes_;
  std::vector<LayerShape> shapes_;
};

inline bool operator==(const Residual& a, const Residual& b) {
  if (a.inner == b.inner) return true;
  if (!a.inner || !b.inner) return false;
  return *a.inner == *b.inner;
}

inline Residual make_residual(NetworkSpec inner) { return Residual{std::make_shared<const NetworkSpec>(std::move(inner))}; }

inline std::size_t shared_output_width(std::size_t width, std::size_t kernel, std::size_t stride) {
  return (width - kernel) / stride + 1;
}

inline void NetworkSpec::validate() {
  auto fail = [](std::size_t i, const std::string& what) {
    throw Error(ErrorKind::Shape, "layer " + std::to_string(i) + ": " + what);
  };
  if (input_arity_ == 0) throw Error(ErrorKind::Shape, "input arity must be positive");
  if (blocks_.empty()) throw Error(ErrorKind::Shape, "at least one input block is required");
  std::size_t total = 0;
  for (std::size_t w : blocks_) {
    if (w == 0) throw Error(ErrorKind::Shape, "input blocks must be non-empty");
    total += w;
  }
  if (total != input_arity_) throw Error(ErrorKind::Shape, "input blocks do not sum to the input arity");
  if (routes_.size() != layers_.size()) throw Error(ErrorKind::Shape, "one route per layer is required");

  std::vector<bool> consumed(blocks_.size(), false);
  shapes_.clear();
  std::size_t prev_out = input_arity_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Route& r = routes_[i];
    if (r.is_block() && r.block >= blocks_.size()) fail(i, "route names a missing block");
    const std::size_t primary = r.is_block() ? blocks_[r.block] : prev_out;
    if (r.is_block())
      consumed[r.block] = true;
    else if (i == 0)
      consumed.assign(consumed.size(), true);

    LayerShape shape{primary, 0};
    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, DenseActivated>) {
            if (layer.weights.rows() == 0) fail(i, "dense layer has no units");
            if (layer.weights.cols() != primary + 1) fail(i, "dense columns must equal inputs + 1 (bias)");
            shape.out = layer.weights.rows();
          } else if constexpr (std::is_same_v<T, LinearOnly>) {
            if (layer.weights.rows() == 0) fail(i, "linear layer has no rows");
            if (layer.weights.cols() != primary + (layer.has_bias ? 1 : 0)) fail(i, "linear columns do not match input");
            shape.out = layer.weights.rows();
          } else if constexpr (std::is_same_v<T, SharedWeight>) {
            if (layer.kernel.empty()) fail(i, "empty kernel");
            if (layer.stride == 0) fail(i, "stride must be positive");
            if (layer.kernel.size() > primary) fail(i, "kernel longer than input");
            shape.out = shared_output_width(primary, layer.kernel.size(), layer.stride);
          } else if constexpr (std::is_same_v<T, RecurrentStep>) {
            if (!r.is_block()) fail(i, "recurrent step must be routed from an input block");
            if (layer.input_weights.rows() == 0) fail(i, "recurrent step has no units");
            if (layer.input_weights.cols() != primary + 1) fail(i, "recurrent columns must equal block width + 1");
            if (i > 0 && prev_out != layer.input_weights.rows()) fail(i, "carried state width mismatch");
            shape.in = primary + (i > 0 ? prev_out : 0);
            shape.out = layer.input_weights.rows();
          } else if constexpr (std::is_same_v<T, Residual>) {
            if (!layer.inner) fail(i, "residual without inner network");
            if (!r.is_block()) fail(i, "residual skip must be routed from an input block");
            const std::size_t inner_in = (i == 0) ? input_arity_ : prev_out;
            if (i == 0) consumed.assign(consumed.size(), true);
            if (layer.inner->input_arity() != inner_in) fail(i, "residual inner arity mismatch");
            if (layer.inner->output_size() != primary) fail(i, "residual inner output must match skip width");
            shape.in = inner_in;
            shape.out = primary;
          } else if constexpr (std::is_same_v<T, Combine>) {
            if (i + 1 != layers_.size()) fail(i, "combine must be the final layer");
            if (r.is_block()) fail(i, "combine reads the previous layer");
            shape.out = 1;
          }
        },
        layers_[i]);
    shapes_.push_back(shape);
    prev_out = shape.out;
  }
  if (layers_.empty()) consumed.assign(consumed.size(), true);
  for (std::size_t k = 0; k < consumed.size(); ++k) {
    if (!consumed[k]) throw Error(ErrorKind::Shape, "input block " + std::to_string(k) + " is never consumed");
  }
}

inline bool is_activation_bearing(const LayerSpec& layer);

/// Number of activation-bearing layers along the network's path.
inline std::size_t activation_depth(const NetworkSpec& net) {
  std::size_t d = 0;
  for (const auto& layer : net.layers()) {
    if (const auto* res = std::get_if<Residual>(&layer))
      d += activation_depth(*res->inner);
    else if (is_activation_bearing(layer))
      ++d;
  }
  return d;
}

inline bool is_activation_bearing(const LayerSpec& layer) {
  if (std::holds_alternative<DenseActivated>(layer)) return true;
  if (const auto* s = std::get_if<SharedWeight>(&layer)) return s->activation.has_value();
  if (const auto* r = std::get_if<RecurrentStep>(&layer)) return r->activation.has_value();
  if (const auto* res = std::get_if<Residual>(&layer)) return activation_depth(*res->inner) > 0;
  return false;
}

}  // namespace actint
