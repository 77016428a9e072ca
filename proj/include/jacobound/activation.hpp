#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "jacobound/error.hpp"
#include "jacobound/linalg.hpp"

namespace jacobound {

enum class ActivationKind { relu, leaky_relu, sigmoid, tanh, arctan, elu };

inline std::string_view name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::arctan: return "arctan";
    case ActivationKind::elu: return "elu";
  }
  return "?";
}

inline std::optional<ActivationKind> parse_activation_kind(std::string_view text) {
  for (auto kind : {ActivationKind::relu, ActivationKind::leaky_relu, ActivationKind::sigmoid,
                    ActivationKind::tanh, ActivationKind::arctan, ActivationKind::elu}) {
    if (name(kind) == text) return kind;
  }
  return std::nullopt;
}

/// Element-wise activation with a non-negative, bounded derivative.
///
/// `alpha` is the negative-side slope of leaky_relu and the scale of elu; it is
/// zero for relu and ignored by the sigmoid family. Both uses require
/// 0 <= alpha <= 1 so that the derivative never exceeds `derivative_sup()`.
class Activation {
 public:
  explicit Activation(ActivationKind kind, double alpha = 0.0) : kind_(kind), alpha_(alpha) {
    switch (kind_) {
      case ActivationKind::relu: alpha_ = 0.0; break;
      case ActivationKind::leaky_relu:
      case ActivationKind::elu:
        if (!std::isfinite(alpha_) || alpha_ < 0.0 || alpha_ > 1.0)
          throw ModelError(std::string(name(kind_)) + " requires 0 <= alpha <= 1, got " +
                           std::to_string(alpha_));
        break;
      default: alpha_ = 0.0; break;
    }
  }

  static Activation relu() { return Activation(ActivationKind::relu); }
  static Activation leaky_relu(double alpha) { return Activation(ActivationKind::leaky_relu, alpha); }
  static Activation sigmoid() { return Activation(ActivationKind::sigmoid); }
  static Activation tanh() { return Activation(ActivationKind::tanh); }
  static Activation arctan() { return Activation(ActivationKind::arctan); }
  static Activation elu(double alpha = 1.0) { return Activation(ActivationKind::elu, alpha); }

  ActivationKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }

  bool piecewise_linear() const noexcept {
    return kind_ == ActivationKind::relu || kind_ == ActivationKind::leaky_relu;
  }

  /// sigmoid, tanh, arctan: even derivative with its single peak at 0.
  bool sigmoid_family() const noexcept {
    return kind_ == ActivationKind::sigmoid || kind_ == ActivationKind::tanh ||
           kind_ == ActivationKind::arctan;
  }

  /// Upper bound C on the derivative over the whole real line.
  double derivative_sup() const noexcept { return kind_ == ActivationKind::sigmoid ? 0.25 : 1.0; }

  double operator()(double x) const {
    switch (kind_) {
      case ActivationKind::relu: return x >= 0.0 ? x : 0.0;
      case ActivationKind::leaky_relu: return x >= 0.0 ? x : alpha_ * x;
      case ActivationKind::sigmoid:
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::arctan: return std::atan(x);
      case ActivationKind::elu: return x >= 0.0 ? x : alpha_ * std::expm1(x);
    }
    return x;
  }

  /// Derivative, using the right derivative at the kink of relu, leaky_relu and elu.
  double derivative(double x) const {
    switch (kind_) {
      case ActivationKind::relu: return x >= 0.0 ? 1.0 : 0.0;
      case ActivationKind::leaky_relu: return x >= 0.0 ? 1.0 : alpha_;
      case ActivationKind::sigmoid: {
        const double e = std::exp(-std::abs(x));
        return e / ((1.0 + e) * (1.0 + e));
      }
      case ActivationKind::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case ActivationKind::arctan: return 1.0 / (1.0 + x * x);
      case ActivationKind::elu: return x >= 0.0 ? 1.0 : alpha_ * std::exp(x);
    }
    return 1.0;
  }

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationKind kind_;
  double alpha_;
};

/// Interval [lower, upper] containing every derivative value of one neuron.
struct GradRange {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(const GradRange& other) const noexcept {
    return lower <= other.lower && other.upper <= upper;
  }
};

inline double derivative_at(const Activation& act, double x) { return act.derivative(x); }

/// Range of the derivative over the pre-activation interval [l, u].
inline GradRange derivative_range(const Activation& act, double l, double u) {
  if (!std::isfinite(l) || !std::isfinite(u))
    throw DomainError("derivative_range: non-finite interval endpoint");
  if (l > u) throw DomainError("derivative_range: lower endpoint exceeds upper endpoint");

  if (act.piecewise_linear()) {
    // A kink at 0 belongs to the slope-1 side.
    if (l >= 0.0) return {1.0, 1.0};
    if (u < 0.0) return {act.alpha(), act.alpha()};
    return {act.alpha(), 1.0};
  }
  if (act.sigmoid_family()) {
    if (u <= 0.0) return {act.derivative(l), act.derivative(u)};
    if (l >= 0.0) return {act.derivative(u), act.derivative(l)};
    return {act.derivative(std::max(-l, u)), act.derivative(0.0)};
  }
  // elu: non-decreasing derivative.
  return {act.derivative(l), act.derivative(u)};
}

/// Derivative range over the whole real line (every neuron unstable).
inline GradRange global_derivative_range(const Activation& act) {
  if (act.piecewise_linear()) return {act.alpha(), 1.0};
  return {0.0, act.derivative_sup()};
}

/// Per-neuron derivative ranges of one hidden layer.
struct GradRanges {
  Vector lower;
  Vector upper;

  Index size() const noexcept { return lower.size(); }
  bool uncertain(Index r) const { return lower(r) < upper(r); }

  static GradRanges constant(Index n, double value) {
    return {Vector::Constant(n, value), Vector::Constant(n, value)};
  }
};

}  // namespace jacobound
