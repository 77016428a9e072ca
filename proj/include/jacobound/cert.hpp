#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "jacobound/lipschitz.hpp"

namespace jacobound {

/// Network whose single output is f_c - f_j.
inline Network margin_network(const Network& net, Index c, Index j) {
  const Index n = net.output_dim();
  if (c < 0 || c >= n || j < 0 || j >= n) throw DimensionError("class index out of range");
  if (c == j) throw DomainError("margin_network needs two distinct classes");
  const Layer& last = net.layer(net.depth());
  Matrix w = last.weights.row(c) - last.weights.row(j);
  Vector b(1);
  b(0) = last.bias(c) - last.bias(j);
  return with_output_layer(net, std::move(w), std::move(b));
}

struct IntegralBound {
  double value = 0.0;
  std::vector<double> t;          // right endpoints i R / n
  std::vector<double> lipschitz;  // local bound on B[s; t_i]
};

/// sum_i L(t_i) R / n for an arbitrary radius -> Lipschitz-bound map, capped at L(R) R.
inline IntegralBound integral_bound(const std::function<double(double)>& lipschitz_at, double radius, int n) {
  if (n < 1) throw DomainError("interval count must be >= 1");
  if (!(radius > 0.0)) throw DomainError("integration radius must be > 0");
  IntegralBound out;
  const double dt = radius / n;
  for (int i = 1; i <= n; ++i) {
    const double t = i == n ? radius : radius * i / n;
    const double lip = lipschitz_at(t);
    out.t.push_back(t);
    out.lipschitz.push_back(lip);
    out.value += lip * dt;
  }
  out.value = std::min(out.value, out.lipschitz.back() * radius);
  return out;
}

inline IntegralBound lipschitz_integral_bound(const Network& margin, const Vector& s, double radius, int n,
                                              Norm p, Method method = Method::recurjac_b,
                                              unsigned threads = 1) {
  return integral_bound(
      [&](double t) { return local_lipschitz(margin, Ball{s, t, p}, method, threads).value; }, radius, n);
}

/// Largest R in [0, r_max] (20 bisection steps) with integral bound below `margin`.
inline double search_radius(const std::function<double(double)>& lipschitz_at, double margin, double r_max,
                            int n) {
  if (!(r_max > 0.0)) throw DomainError("maximum radius must be > 0");
  if (margin <= 0.0) return 0.0;
  auto certified = [&](double r) { return integral_bound(lipschitz_at, r, n).value < margin; };
  if (certified(r_max)) return r_max;
  double lo = 0.0, hi = r_max;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (certified(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

enum class TargetMode { untargeted, runner_up, random, least_likely };

inline std::string_view to_string(TargetMode m) {
  switch (m) {
    case TargetMode::untargeted: return "untargeted";
    case TargetMode::runner_up: return "runner-up";
    case TargetMode::random: return "random";
    case TargetMode::least_likely: return "least-likely";
  }
  return "?";
}

inline std::optional<TargetMode> parse_target_mode(std::string_view text) {
  for (auto m : {TargetMode::untargeted, TargetMode::runner_up, TargetMode::random, TargetMode::least_likely})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

inline Index argmax(const Vector& v) {
  Index best = 0;
  v.maxCoeff(&best);
  return best;
}

/// Target classes for `scores` with true class c.
inline std::vector<Index> select_targets(const Vector& scores, Index c, TargetMode mode, std::uint64_t seed = 0) {
  std::vector<Index> others;
  for (Index j = 0; j < scores.size(); ++j)
    if (j != c) others.push_back(j);
  if (others.empty() || mode == TargetMode::untargeted) return others;
  switch (mode) {
    case TargetMode::runner_up:
      return {*std::max_element(others.begin(), others.end(),
                                [&](Index a, Index b) { return scores(a) < scores(b); })};
    case TargetMode::least_likely:
      return {*std::min_element(others.begin(), others.end(),
                                [&](Index a, Index b) { return scores(a) < scores(b); })};
    case TargetMode::random: {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
      return {others[pick(rng)]};
    }
    default: return others;
  }
}

struct TargetCertificate {
  Index target = 0;
  double margin = 0.0;
  double radius = 0.0;
  IntegralBound grid;  // evaluated at the certified radius (empty when it is 0)
};

struct Certificate {
  Vector source;
  Index true_class = 0;
  Norm p = Norm::linf;
  int intervals = 30;
  double radius = 0.0;
  std::vector<TargetCertificate> targets;
};

/// Radius within which no target in `targets` can overtake class c.
inline Certificate certify_radius(const Network& net, const Vector& s, Index c, const std::vector<Index>& targets,
                                  Norm p, double r_max, int n = 30, Method method = Method::recurjac_b,
                                  unsigned threads = 1) {
  const Vector scores = evaluate(net, s);
  if (c < 0 || c >= scores.size()) throw DimensionError("class index out of range");
  if (argmax(scores) != c)
    throw CertificationRefused("input is classified as " + std::to_string(argmax(scores)) + ", not " +
                               std::to_string(c));
  if (targets.empty()) throw DomainError("no target classes to certify against");
  if (!(r_max > 0.0)) throw DomainError("maximum radius must be > 0");

  Certificate cert{s, c, p, n, 0.0, std::vector<TargetCertificate>(targets.size())};
  parallel_for(targets.size(), threads, [&](std::size_t i) {
    const Index j = targets[i];
    const Network margin_net = margin_network(net, c, j);
    TargetCertificate& tc = cert.targets[i];
    tc.target = j;
    tc.margin = scores(c) - scores(j);
    if (tc.margin < 0.0) throw CertificationRefused("negative margin against class " + std::to_string(j));
    auto lip = [&](double t) { return local_lipschitz(margin_net, Ball{s, t, p}, method).value; };
    tc.radius = search_radius(lip, tc.margin, r_max, n);
    if (tc.radius > 0.0) tc.grid = integral_bound(lip, tc.radius, n);
  });
  cert.radius = std::numeric_limits<double>::infinity();
  for (const auto& tc : cert.targets) cert.radius = std::min(cert.radius, tc.radius);
  return cert;
}

struct ExclusionResult {
  Index output = 0;
  double radius = 0.0;           // +inf when the witness holds everywhere
  std::optional<Index> witness;  // coordinate k of grad f_j that never vanishes
  int sign = 0;                  // +1 always positive, -1 always negative
};

namespace detail {

struct Witness {
  Index k;
  int sign;
};

inline std::optional<Witness> sign_fixed_coordinate(const BoundPair& jac) {
  for (Index k = 0; k < jac.lower.cols(); ++k) {
    if (jac.lower(0, k) > 0.0) return Witness{k, 1};
    if (jac.upper(0, k) < 0.0) return Witness{k, -1};
  }
  return std::nullopt;
}

}  // namespace detail

/// Largest radius around s within which grad f_j provably has a sign-fixed coordinate.
inline ExclusionResult exclusion_radius(const Network& net, const Vector& s, Index j, Norm p, double r_max,
                                        Method method = Method::recurjac_b, unsigned threads = 1) {
  if (!(r_max > 0.0)) throw DomainError("maximum radius must be > 0");
  if (method == Method::naive) throw DomainError("exclusion radius needs Jacobian bounds");
  const Network row = select_output(net, j);
  check_input(row, s);
  auto probe = [&](const LayerIntervals& li) {
    return detail::sign_fixed_coordinate(jacobian_bounds(row, li, method, threads).jacobian());
  };
  auto at = [&](double r) { return probe(IntervalPropagation{}(row, Ball{s, r, p})); };
  ExclusionResult result{j, 0.0, std::nullopt, 0};
  auto record = [&](double r, const std::optional<detail::Witness>& w) {
    result.radius = r;
    if (w) {
      result.witness = w->k;
      result.sign = w->sign;
    }
    return result;
  };

  if (auto w = probe(global_grad_ranges(row))) return record(std::numeric_limits<double>::infinity(), w);
  if (auto w = at(r_max)) return record(r_max, w);
  auto best = at(0.0);
  if (!best) return record(0.0, std::nullopt);
  double lo = 0.0, hi = r_max;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (auto w = at(mid)) {
      lo = mid;
      best = w;
    } else {
      hi = mid;
    }
  }
  return record(lo, best);
}

}  // namespace jacobound
