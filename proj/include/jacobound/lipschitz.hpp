#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jacobound/jacbound.hpp"

namespace jacobound {

enum class Method { recurjac_b, recurjac_f0, recurjac_f1, fastlip, naive };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::recurjac_b: return "recurjac-b";
    case Method::recurjac_f0: return "recurjac-f0";
    case Method::recurjac_f1: return "recurjac-f1";
    case Method::fastlip: return "fastlip";
    case Method::naive: return "naive";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view text) {
  for (auto m : {Method::recurjac_b, Method::recurjac_f0, Method::recurjac_f1, Method::fastlip, Method::naive})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

struct LipschitzResult {
  double value = 0.0;
  Norm p = Norm::linf;
  double radius = 0.0;
  Method method = Method::recurjac_b;
};

/// M = max(|L|, |U|) of the input-Jacobian bounds.
inline Matrix worst_case_matrix(const BoundPair& b) {
  require(b.lower.rows() == b.upper.rows() && b.lower.cols() == b.upper.cols(),
          "worst_case_matrix: shape mismatch");
  return b.lower.cwiseAbs().cwiseMax(b.upper.cwiseAbs());
}

inline Matrix worst_case_matrix(const JacobianBounds& jb) { return worst_case_matrix(jb.jacobian()); }

struct PowerIterationOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

/// Spectral norm of an entry-wise non-negative matrix.
///
/// Power iteration on M^T M from the normalised all-ones vector. Every iterate is
/// non-negative, so max_i (M^T M x)_i / x_i over x_i > 0 is an upper bound on the
/// top eigenvalue; iteration stops once it is within `tolerance` (relative) of the
/// Rayleigh quotient and returns the square root of that upper bound.
inline double nonnegative_spectral_norm(const Matrix& m, PowerIterationOptions opt = {}) {
  if (m.size() == 0 || m.maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  Vector x = Vector::Constant(m.cols(), 1.0 / std::sqrt(static_cast<double>(m.cols())));
  double gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Vector y = gram * x;
    const double rayleigh = x.dot(y);
    double upper = 0.0;
    for (Index i = 0; i < x.size(); ++i)
      if (x(i) > 0.0) upper = std::max(upper, y(i) / x(i));
    gap = (upper - rayleigh) / std::max(upper, std::numeric_limits<double>::min());
    if (gap <= opt.tolerance) return std::sqrt(upper);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
  }
  throw ConvergenceError("power iteration did not converge", gap);
}

/// Induced p-norm of M.
inline double lipschitz_p(const Matrix& m, Norm p) {
  if (m.size() == 0) return 0.0;
  switch (p) {
    case Norm::l1: {
      double best = 0.0;
      for (Index k = 0; k < m.cols(); ++k) {
        double sum = 0.0;
        for (Index j = 0; j < m.rows(); ++j) sum += std::abs(m(j, k));
        best = std::max(best, sum);
      }
      return best;
    }
    case Norm::linf: {
      double best = 0.0;
      for (Index j = 0; j < m.rows(); ++j) {
        double sum = 0.0;
        for (Index k = 0; k < m.cols(); ++k) sum += std::abs(m(j, k));
        best = std::max(best, sum);
      }
      return best;
    }
    case Norm::l2: return nonnegative_spectral_norm(m.cwiseAbs());
  }
  return 0.0;
}

/// Per-row refined bound on sum_k |Y_jk| over the ball, for backward recursion bounds.
inline Vector lipschitz_inf_refined_rows(const FactorChain& chain, const std::vector<BoundPair>& levels,
                                         unsigned threads = 1) {
  const BoundPair& jac = levels.front();
  const Matrix m = worst_case_matrix(jac);
  const Index rows = jac.lower.rows();
  const Index cols = jac.lower.cols();
  Vector out(rows);
  parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t task) {
    const Index j = static_cast<Index>(task);
    double uncertain = 0.0;
    double plain = 0.0;
    Vector d = Vector::Zero(cols);
    for (Index k = 0; k < cols; ++k) {
      plain += m(j, k);
      if (jac.lower(j, k) >= 0.0)
        d(k) = 1.0;
      else if (jac.upper(j, k) <= 0.0)
        d(k) = -1.0;
      else
        uncertain += m(j, k);
    }
    double fixed = 0.0;
    if (chain.depth() == 1) {
      fixed = chain.W(1).row(j).dot(d);
    } else {
      const Matrix w_hat = chain.W(1) * d;
      fixed = bound_row(chain, levels, j, 1, w_hat, Side::upper)(0);
    }
    out(j) = std::min(fixed + uncertain, plain);
  });
  return out;
}

/// Refined bound on max ||grad f(x)||_inf over an l_inf ball.
inline double lipschitz_inf_refined(const Network& net, const JacobianBounds& jb, const LayerIntervals& li,
                                    unsigned threads = 1) {
  if (jb.direction != Direction::backward || static_cast<int>(jb.levels.size()) != net.depth())
    throw DomainError("refinement needs all backward recursion levels");
  const Vector rows = lipschitz_inf_refined_rows(FactorChain::from(net, li), jb.levels, threads);
  return rows.size() == 0 ? 0.0 : rows.maxCoeff();
}

inline JacobianBounds jacobian_bounds(const Network& net, const LayerIntervals& li, Method method,
                                      unsigned threads = 1) {
  switch (method) {
    case Method::recurjac_b: return recurjac_backward(net, li, threads);
    case Method::recurjac_f0: return recurjac_forward(net, li, ForwardVariant::f0, threads);
    case Method::recurjac_f1: return recurjac_forward(net, li, ForwardVariant::f1, threads);
    case Method::fastlip: return fastlip(net, li);
    case Method::naive: break;
  }
  throw DomainError("method '" + std::string(to_string(method)) + "' does not produce Jacobian bounds");
}

/// Certified upper bound on the local Lipschitz constant of `net` over `ball`.
template <PreactivationProvider Provider = IntervalPropagation>
LipschitzResult local_lipschitz(const Network& net, const Ball& ball, Method method, unsigned threads = 1,
                                const Provider& provider = {}) {
  LipschitzResult result{0.0, ball.p, ball.radius, method};
  if (method == Method::naive) {
    result.value = naive_global_lipschitz(net, ball.p);
    return result;
  }
  const LayerIntervals li = provider(net, ball);
  const JacobianBounds jb = jacobian_bounds(net, li, method, threads);
  if (method == Method::recurjac_b && ball.p == Norm::linf)
    result.value = lipschitz_inf_refined(net, jb, li, threads);
  else
    result.value = lipschitz_p(worst_case_matrix(jb), ball.p);
  return result;
}

/// Same pipeline with derivative ranges valid everywhere.
inline double global_lipschitz(const Network& net, Norm p, Method method, unsigned threads = 1) {
  if (method == Method::naive) return naive_global_lipschitz(net, p);
  const LayerIntervals li = global_grad_ranges(net);
  const JacobianBounds jb = jacobian_bounds(net, li, method, threads);
  if (method == Method::recurjac_b && p == Norm::linf) return lipschitz_inf_refined(net, jb, li, threads);
  return lipschitz_p(worst_case_matrix(jb), p);
}

}  // namespace jacobound
