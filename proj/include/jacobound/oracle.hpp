#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "jacobound/jacbound.hpp"

namespace jacobound {

/// Exact element-wise extrema of the chain product over all endpoint patterns.
struct PatternEnumeration {
  std::vector<std::pair<int, Index>> unstable;  // (layer, neuron)
  std::uint64_t patterns = 0;
  Matrix lower;
  Matrix upper;
};

/// Enumerate every assignment of the uncertain diagonal entries to their endpoints.
/// The product is multilinear in those entries, so its extrema sit at endpoints.
inline PatternEnumeration enumerate_chain(const FactorChain& chain, int cap = 16) {
  PatternEnumeration out;
  for (int l = 1; l < chain.depth(); ++l)
    for (Index r = 0; r < chain.g(l).size(); ++r)
      if (chain.g(l).uncertain(r)) out.unstable.emplace_back(l, r);
  if (static_cast<int>(out.unstable.size()) > cap)
    throw DomainError("enumeration needs " + std::to_string(out.unstable.size()) +
                      " uncertain neurons, cap is " + std::to_string(cap));
  out.patterns = std::uint64_t{1} << out.unstable.size();

  std::vector<Vector> slopes;
  for (int l = 1; l < chain.depth(); ++l) slopes.push_back(chain.g(l).lower);
  for (std::uint64_t mask = 0; mask < out.patterns; ++mask) {
    for (std::size_t i = 0; i < out.unstable.size(); ++i) {
      const auto [l, r] = out.unstable[i];
      const GradRanges& g = chain.g(l);
      slopes[static_cast<std::size_t>(l - 1)](r) = (mask >> i) & 1u ? g.upper(r) : g.lower(r);
    }
    Matrix product = chain.W(1);
    for (int l = 2; l <= chain.depth(); ++l)
      product = chain.W(l) * (slopes[static_cast<std::size_t>(l - 2)].asDiagonal() * product);
    if (mask == 0) {
      out.lower = product;
      out.upper = product;
    } else {
      out.lower = out.lower.cwiseMin(product);
      out.upper = out.upper.cwiseMax(product);
    }
  }
  return out;
}

inline PatternEnumeration enumerate_exact(const Network& net, const LayerIntervals& li, int cap = 16) {
  for (int l = 1; l < net.depth(); ++l)
    if (!net.activation(l).piecewise_linear())
      throw DomainError("enumeration supports relu and leaky_relu only");
  return enumerate_chain(FactorChain::from(net, li), cap);
}

/// Uniform sample from the ball.
template <typename Rng>
Vector sample_ball(const Ball& ball, Rng& rng) {
  const Index n = ball.center.size();
  Vector offset(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (ball.p) {
    case Norm::linf: {
      std::uniform_real_distribution<double> coord(-1.0, 1.0);
      for (Index i = 0; i < n; ++i) offset(i) = coord(rng);
      break;
    }
    case Norm::l2: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (Index i = 0; i < n; ++i) offset(i) = gauss(rng);
      const double norm = offset.norm();
      if (norm > 0.0) offset /= norm;
      offset *= std::pow(unit(rng), 1.0 / static_cast<double>(n));
      break;
    }
    case Norm::l1: {
      // n + 1 exponential draws normalised give a uniform point of the simplex;
      // dropping the slack coordinate and adding signs fills the l1 ball.
      std::exponential_distribution<double> expo(1.0);
      double total = 0.0;
      for (Index i = 0; i < n; ++i) total += offset(i) = expo(rng);
      total += expo(rng);
      for (Index i = 0; i < n; ++i) offset(i) = offset(i) / total * (unit(rng) < 0.5 ? -1.0 : 1.0);
      break;
    }
  }
  return ball.center + ball.radius * offset;
}

/// Max of ||jacobian_at(x)||_p over the center and `samples` uniform points.
inline double sample_lipschitz_lower(const Network& net, const Ball& ball, int samples, std::uint64_t seed = 0) {
  ball.validate(net.input_dim());
  std::mt19937_64 rng(seed);
  double best = induced_norm(jacobian_at(net, ball.center), ball.p);
  for (int i = 0; i < samples; ++i) best = std::max(best, induced_norm(jacobian_at(net, sample_ball(ball, rng)), ball.p));
  return best;
}

/// Central-difference Jacobian with step h.
inline Matrix finite_diff_jacobian(const Network& net, const Vector& x, double h) {
  check_input(net, x);
  if (!(h > 0.0)) throw DomainError("finite-difference step must be > 0");
  Matrix jac(net.output_dim(), net.input_dim());
  for (Index k = 0; k < x.size(); ++k) {
    Vector plus = x, minus = x;
    plus(k) += h;
    minus(k) -= h;
    jac.col(k) = (evaluate(net, plus) - evaluate(net, minus)) / (2.0 * h);
  }
  return jac;
}

}  // namespace jacobound
