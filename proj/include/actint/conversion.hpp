#pragma once

#include <cstddef>
#include <vector>

#include "actint/activation.hpp"
#include "actint/network.hpp"

namespace actint {

/// Converts every hidden dense layer to another activation family, unit by
/// unit, preserving each unit's center profile. A unit reads its affine input
/// z = W[i]·[x; 1] as ActivationUnit(kind, 1, 0, 1, 0); the converted inner
/// parameters rescale the row and the outer scale/offset fold into the
/// successor column and bias.
inline NetworkSpec convert_network(const NetworkSpec& net, Activation target) {
  std::vector<LayerSpec> layers(net.layers().begin(), net.layers().end());
  for (std::size_t li = 0; li + 1 < layers.size(); ++li) {
    auto* d = std::get_if<DenseActivated>(&layers[li]);
    if (!d || d->activation == target) continue;
    if (net.route(li + 1).is_block()) continue;

    Matrix* succ = nullptr;
    bool succ_bias = true;
    if (auto* nd = std::get_if<DenseActivated>(&layers[li + 1])) {
      succ = &nd->weights;
    } else if (auto* nl = std::get_if<LinearOnly>(&layers[li + 1])) {
      succ = &nl->weights;
      succ_bias = nl->has_bias;
    } else {
      continue;
    }
    if (d->activation == Activation::Relu) throw Error(ErrorKind::UnsupportedTarget, "relu units have no center to match");

    const std::size_t units = d->weights.rows();
    const std::size_t in_cols = d->weights.cols();
    Matrix hidden(units, in_cols);
    Matrix next(succ->rows(), units + (succ_bias ? succ->cols() - units : 1));
    for (std::size_t r = 0; r < succ->rows(); ++r) {
      for (std::size_t c = 0; c < succ->cols(); ++c) next(r, c) = (*succ)(r, c);
    }
    for (std::size_t i = 0; i < units; ++i) {
      const auto converted = convert_unit(ActivationUnit(d->activation, 1.0, 0.0, 1.0, 0.0), target);
      for (std::size_t c = 0; c < in_cols; ++c) hidden(i, c) = converted.k1() * d->weights(i, c);
      hidden(i, in_cols - 1) += converted.b();
      for (std::size_t r = 0; r < succ->rows(); ++r) {
        const double w = (*succ)(r, i);
        next(r, i) = w * converted.k2();
        next(r, next.cols() - 1) += w * converted.l();
      }
    }
    d->weights = std::move(hidden);
    d->activation = target;
    if (auto* nd = std::get_if<DenseActivated>(&layers[li + 1])) {
      nd->weights = std::move(next);
    } else {
      auto& nl = std::get<LinearOnly>(layers[li + 1]);
      nl.weights = std::move(next);
      nl.has_bias = true;
    }
  }
  return NetworkSpec(net.input_arity(), {net.blocks().begin(), net.blocks().end()}, std::move(layers),
                     {net.routes().begin(), net.routes().end()});
}

}  // namespace actint
