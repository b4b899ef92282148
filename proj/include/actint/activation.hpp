#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "actint/error.hpp"

namespace actint {

enum class Activation { HardLinear, Relu, Sigmoid, Tanh };

constexpr std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::HardLinear: return "hard";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

inline std::optional<Activation> parse_activation(std::string_view tag) {
  if (tag == "hard" || tag == "hardlinear" || tag == "linear") return Activation::HardLinear;
  if (tag == "relu") return Activation::Relu;
  if (tag == "sigmoid") return Activation::Sigmoid;
  if (tag == "tanh") return Activation::Tanh;
  return std::nullopt;
}

/// The normalized activation applied by network layers (outer scale 1, offset 0).
inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::HardLinear: return std::clamp(z, 0.0, 1.0);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

/// d/dz of activate(). Hard kinks take the zero branch.
inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::HardLinear: return (z > 0.0 && z < 1.0) ? 1.0 : 0.0;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

/// One neuron, k2 * act(k1 * x + b) + l.
class ActivationUnit {
 public:
  ActivationUnit(Activation kind, double k1, double b, double k2 = 1.0, double l = 0.0)
      : kind_(kind), k1_(k1), b_(b), k2_(k2), l_(l) {
    if (!std::isfinite(k1) || !std::isfinite(b) || !std::isfinite(k2) || !std::isfinite(l))
      throw Error(ErrorKind::InvalidInput, "activation unit parameters must be finite");
    if (k1 == 0.0) throw Error(ErrorKind::DegenerateUnit, "inner slope k1 must be nonzero");
  }

  /// Folds a general band [y_min, y_max] into the normalized [0,1] clamp.
  static ActivationUnit hard_with_band(double k1, double b, double y_min, double y_max, double k2 = 1.0,
                                       double l = 0.0) {
    if (!(y_max > y_min)) throw Error(ErrorKind::InvalidInput, "band requires y_max > y_min");
    const double span = y_max - y_min;
    // min{max{y_min, k1 x + b}, y_max} = span * clamp((k1 x + b - y_min) / span) + y_min
    return ActivationUnit(Activation::HardLinear, k1 / span, (b - y_min) / span, k2 * span, k2 * y_min + l);
  }

  Activation kind() const noexcept { return kind_; }
  double k1() const noexcept { return k1_; }
  double b() const noexcept { return b_; }
  double k2() const noexcept { return k2_; }
  double l() const noexcept { return l_; }

  friend bool operator==(const ActivationUnit&, const ActivationUnit&) = default;

 private:
  Activation kind_;
  double k1_;
  double b_;
  double k2_;
  double l_;
};

inline double unit_eval(const ActivationUnit& u, double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "non-finite evaluation point");
  return u.k2() * activate(u.kind(), u.k1() * x + u.b()) + u.l();
}

inline double unit_derivative(const ActivationUnit& u, double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "non-finite evaluation point");
  return u.k1() * u.k2() * activate_derivative(u.kind(), u.k1() * x + u.b());
}

/// r1 + r2 == u everywhere: k2*relu(z) + l - k2*relu(z - 1).
inline std::pair<ActivationUnit, ActivationUnit> relu_pair_from_hard(const ActivationUnit& u) {
  if (u.kind() != Activation::HardLinear)
    throw Error(ErrorKind::KindMismatch, "relu pair expansion needs a hard-linear unit");
  return {ActivationUnit(Activation::Relu, u.k1(), u.b(), u.k2(), u.l()),
          ActivationUnit(Activation::Relu, u.k1(), u.b() - 1.0, -u.k2(), 0.0)};
}

struct CenterProfile {
  double center_x;
  double center_value;
  double center_slope;
};

inline CenterProfile unit_center(const ActivationUnit& u) {
  switch (u.kind()) {
    case Activation::HardLinear:
      return {(1.0 - 2.0 * u.b()) / (2.0 * u.k1()), u.k2() / 2.0 + u.l(), u.k1() * u.k2()};
    case Activation::Sigmoid:
      return {-u.b() / u.k1(), u.k2() / 2.0 + u.l(), u.k1() * u.k2() / 4.0};
    case Activation::Tanh:
      return {-u.b() / u.k1(), u.l(), u.k1() * u.k2()};
    case Activation::Relu:
      break;
  }
  throw Error(ErrorKind::KindMismatch, "relu has no symmetric center");
}

/// Re-expresses u in another saturating family with the same center point,
/// center value and center slope. Three equations fix three of the four
/// parameters; the outer scale follows k2' = 2 (center_value - l), falling back
/// to the source k2 when that would vanish (always the case for tanh sources).
inline ActivationUnit convert_unit(const ActivationUnit& u, Activation target) {
  if (target == Activation::Relu) throw Error(ErrorKind::UnsupportedTarget, "relu has no finite center");
  if (u.kind() == target) return u;
  const CenterProfile c = unit_center(u);
  if (c.center_slope == 0.0) throw Error(ErrorKind::DegenerateUnit, "unit has zero center slope");

  double k2 = 2.0 * (c.center_value - u.l());
  double l = target == Activation::Tanh ? c.center_value : u.l();
  if (k2 == 0.0) {
    k2 = u.k2();
    if (target != Activation::Tanh) l = c.center_value - k2 / 2.0;
  }

  double k1 = 0.0;
  double b = 0.0;
  switch (target) {
    case Activation::HardLinear:
      k1 = c.center_slope / k2;
      b = 0.5 - k1 * c.center_x;
      break;
    case Activation::Sigmoid:
      k1 = 4.0 * c.center_slope / k2;
      b = -k1 * c.center_x;
      break;
    case Activation::Tanh:
      k1 = c.center_slope / k2;
      b = -k1 * c.center_x;
      break;
    case Activation::Relu:
      break;
  }
  return ActivationUnit(target, k1, b, k2, l);
}

}  // namespace actint
