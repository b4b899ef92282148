#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actint/activation.hpp"
#include "actint/network.hpp"

namespace actint {

/// xorshift64* (Vigna, 2016): state ^= state >> 12; state ^= state << 25;
/// state ^= state >> 27; output state * 0x2545F4914F6CDD1D. The seed is first
/// passed through one splitmix64 step so that small seeds give unrelated streams.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    state_ = z ^ (z >> 31);
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  Activation activation = Activation::Sigmoid;
  std::size_t hidden_width = 8;
};

struct Sample {
  double x;
  double y;
};

struct TrainResult {
  NetworkSpec network;
  std::vector<double> loss_history;  // epochs + 1 entries, initial loss first
};

/// Parameters of the trainer's [dense(1 -> width), linear(width -> 1, bias)]
/// network, flattened as W1 row-major then the read-out row.
inline std::size_t mlp_parameter_count(std::size_t width) { return 2 * width + width + 1; }

inline NetworkSpec mlp_from_parameters(std::span<const double> theta, std::size_t width, Activation kind) {
  if (theta.size() != mlp_parameter_count(width)) throw Error(ErrorKind::Shape, "parameter vector size mismatch");
  Matrix w1(width, 2, std::vector<double>(theta.begin(), theta.begin() + 2 * width));
  Matrix w2(1, width + 1, std::vector<double>(theta.begin() + 2 * width, theta.end()));
  return NetworkSpec(1, {DenseActivated{std::move(w1), kind}, LinearOnly{std::move(w2), true}});
}

inline std::vector<double> mlp_parameters(const NetworkSpec& net) {
  if (net.layers().size() != 2) throw Error(ErrorKind::Shape, "not a trainer network");
  const auto* d = std::get_if<DenseActivated>(&net.layer(0));
  const auto* l = std::get_if<LinearOnly>(&net.layer(1));
  if (!d || !l || d->weights.cols() != 2 || l->weights.rows() != 1 || !l->has_bias)
    throw Error(ErrorKind::Shape, "not a trainer network");
  std::vector<double> theta(d->weights.data().begin(), d->weights.data().end());
  theta.insert(theta.end(), l->weights.data().begin(), l->weights.data().end());
  return theta;
}

namespace detail {

// Mean squared error and, when grad is non-null, its gradient.
inline double mlp_loss(std::span<const double> theta, std::size_t width, Activation kind,
                       std::span<const Sample> data, std::vector<double>* grad) {
  const double* w1 = theta.data();
  const double* w2 = theta.data() + 2 * width;
  if (grad) grad->assign(theta.size(), 0.0);
  std::vector<double> z(width);
  std::vector<double> a(width);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (const auto& s : data) {
    double yhat = w2[width];
    for (std::size_t i = 0; i < width; ++i) {
      z[i] = w1[2 * i] * s.x + w1[2 * i + 1];
      a[i] = activate(kind, z[i]);
      yhat += w2[i] * a[i];
    }
    const double e = yhat - s.y;
    loss += e * e * inv_n;
    if (!grad) continue;
    const double g = 2.0 * e * inv_n;
    double* gw1 = grad->data();
    double* gw2 = grad->data() + 2 * width;
    for (std::size_t i = 0; i < width; ++i) {
      gw2[i] += g * a[i];
      const double back = g * w2[i] * activate_derivative(kind, z[i]);
      gw1[2 * i] += back * s.x;
      gw1[2 * i + 1] += back;
    }
    gw2[width] += g;
  }
  return loss;
}

}  // namespace detail

inline double mse_loss(const NetworkSpec& net, std::span<const Sample> data) {
  const auto theta = mlp_parameters(net);
  const auto kind = std::get<DenseActivated>(net.layer(0)).activation;
  return detail::mlp_loss(theta, (theta.size() - 1) / 3, kind, data, nullptr);
}

/// Analytic gradient of the MSE with respect to mlp_parameters(net). Hard
/// kinds use the zero subgradient at and outside the band edges.
inline std::vector<double> mse_gradient(const NetworkSpec& net, std::span<const Sample> data) {
  const auto theta = mlp_parameters(net);
  const auto kind = std::get<DenseActivated>(net.layer(0)).activation;
  std::vector<double> grad;
  detail::mlp_loss(theta, (theta.size() - 1) / 3, kind, data, &grad);
  return grad;
}

/// Full-batch gradient descent on MSE from a uniform [-1, 1] initialization.
/// Deterministic: equal (config, data) give bit-identical weights.
inline TrainResult train(const TrainConfig& cfg, std::span<const Sample> data) {
  if (data.empty()) throw Error(ErrorKind::InvalidInput, "empty dataset");
  if (cfg.epochs == 0 || cfg.hidden_width == 0 || !(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw Error(ErrorKind::InvalidConfig, "epochs, width and learning rate must be positive");
  for (const auto& s : data) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw Error(ErrorKind::InvalidInput, "non-finite sample");
  }
  const std::size_t width = cfg.hidden_width;
  Xorshift64Star rng(cfg.seed);
  std::vector<double> theta(mlp_parameter_count(width));
  for (double& t : theta) t = 2.0 * rng.uniform() - 1.0;

  TrainResult result;
  result.loss_history.reserve(cfg.epochs + 1);
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const bool last = epoch == cfg.epochs;
    const double loss = detail::mlp_loss(theta, width, cfg.activation, data, last ? nullptr : &grad);
    if (!std::isfinite(loss)) throw Error(ErrorKind::TrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss);
    if (last) break;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= cfg.learning_rate * grad[k];
  }
  result.network = mlp_from_parameters(theta, width, cfg.activation);
  return result;
}

}  // namespace actint
