#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include "jacobound/network.hpp"

namespace jacobound {

/// Closed l_p ball B_p[s; R].
struct Ball {
  Vector center;
  double radius = 0.0;
  Norm p = Norm::linf;

  void validate(Index dim) const {
    if (center.size() != dim)
      throw DimensionError("ball center has dimension " + std::to_string(center.size()) +
                           ", network expects " + std::to_string(dim));
    if (!(radius >= 0.0) || std::isnan(radius)) throw DomainError("ball radius must be >= 0");
    if (!all_finite(center)) throw DomainError("ball center has non-finite entries");
  }
};

/// Pre-activation bounds of every hidden layer and the derivative ranges they imply.
struct LayerIntervals {
  std::vector<Vector> lower;  // l^(l), index l-1
  std::vector<Vector> upper;
  std::vector<GradRanges> grads;

  int hidden_layers() const noexcept { return static_cast<int>(lower.size()); }
  const GradRanges& grad(int l) const { return grads.at(static_cast<std::size_t>(l - 1)); }
};

/// Anything that maps (net, ball) to pre-activation bounds.
template <typename P>
concept PreactivationProvider = requires(const P& provider, const Network& net, const Ball& ball) {
  { provider(net, ball) } -> std::convertible_to<LayerIntervals>;
};

/// Interval bound propagation. The first layer is exact for the ball (dual norm of
/// each weight row); deeper layers use midpoint/radius interval arithmetic on the
/// monotone activation outputs.
inline LayerIntervals interval_propagate(const Network& net, const Ball& ball) {
  ball.validate(net.input_dim());
  LayerIntervals li;
  const int hidden = net.depth() - 1;
  if (hidden == 0) return li;

  const Layer& first = net.layer(1);
  const Vector center = first.weights * ball.center + first.bias;
  Vector spread(first.outputs());
  const Norm q = dual(ball.p);
  for (Index r = 0; r < first.outputs(); ++r) spread(r) = ball.radius * vector_norm(first.weights.row(r).transpose(), q);
  li.lower.push_back(center - spread);
  li.upper.push_back(center + spread);

  for (int l = 2; l <= hidden; ++l) {
    const Activation& act = net.activation(l - 1);
    const Vector& lo = li.lower.back();
    const Vector& hi = li.upper.back();
    Vector mid(lo.size()), rad(lo.size());
    for (Index r = 0; r < lo.size(); ++r) {
      const double a = act(lo(r));
      const double b = act(hi(r));
      mid(r) = 0.5 * (a + b);
      rad(r) = 0.5 * (b - a);
    }
    const Layer& layer = net.layer(l);
    const Vector c = layer.weights * mid + layer.bias;
    const Vector w = layer.weights.cwiseAbs() * rad;
    li.lower.push_back(c - w);
    li.upper.push_back(c + w);
  }
  return li;
}

/// Fill the derivative ranges of `li` from its pre-activation bounds.
inline LayerIntervals grad_ranges(const Network& net, LayerIntervals li) {
  li.grads.clear();
  for (int l = 1; l <= li.hidden_layers(); ++l) {
    const Activation& act = net.activation(l);
    const Vector& lo = li.lower[static_cast<std::size_t>(l - 1)];
    const Vector& hi = li.upper[static_cast<std::size_t>(l - 1)];
    GradRanges g{Vector(lo.size()), Vector(lo.size())};
    for (Index r = 0; r < lo.size(); ++r) {
      const GradRange range = derivative_range(act, lo(r), hi(r));
      g.lower(r) = range.lower;
      g.upper(r) = range.upper;
    }
    li.grads.push_back(std::move(g));
  }
  return li;
}

/// Derivative ranges valid on the whole input space; pre-activation bounds are +-inf.
inline LayerIntervals global_grad_ranges(const Network& net) {
  LayerIntervals li;
  const double inf = std::numeric_limits<double>::infinity();
  for (int l = 1; l < net.depth(); ++l) {
    const Index n = net.layer(l).outputs();
    li.lower.push_back(Vector::Constant(n, -inf));
    li.upper.push_back(Vector::Constant(n, inf));
    const GradRange range = global_derivative_range(net.activation(l));
    li.grads.push_back({Vector::Constant(n, range.lower), Vector::Constant(n, range.upper)});
  }
  return li;
}

struct IntervalPropagation {
  LayerIntervals operator()(const Network& net, const Ball& ball) const {
    return grad_ranges(net, interval_propagate(net, ball));
  }
};

/// Pre-activation bounds plus derivative ranges for `ball`.
template <PreactivationProvider Provider = IntervalPropagation>
LayerIntervals layer_intervals(const Network& net, const Ball& ball, const Provider& provider = {}) {
  return provider(net, ball);
}

}  // namespace jacobound
