#pragma once

#include <string>
#include <vector>

#include "jacobound/parallel.hpp"
#include "jacobound/preact.hpp"

namespace jacobound {

/// The product W_H S_{H-1} W_{H-1} ... S_1 W_1 with every S_l a diagonal matrix
/// whose entries range over the intervals in grads[l-1].
struct FactorChain {
  std::vector<Matrix> weights;     // W_1 .. W_H
  std::vector<GradRanges> grads;   // layers 1 .. H-1

  int depth() const noexcept { return static_cast<int>(weights.size()); }
  const Matrix& W(int l) const { return weights[static_cast<std::size_t>(l - 1)]; }
  const GradRanges& g(int l) const { return grads[static_cast<std::size_t>(l - 1)]; }
  Index rows() const { return weights.back().rows(); }

  static FactorChain from(const Network& net, const LayerIntervals& li) {
    if (li.hidden_layers() != net.depth() - 1 || static_cast<int>(li.grads.size()) != net.depth() - 1)
      throw DimensionError("layer intervals do not match the network depth");
    FactorChain chain;
    for (int l = 1; l <= net.depth(); ++l) {
      chain.weights.push_back(net.weights(l));
      if (l < net.depth()) {
        const GradRanges& g = li.grad(l);
        if (g.size() != net.layer(l).outputs()) throw DimensionError("derivative ranges have wrong width");
        chain.grads.push_back(g);
      }
    }
    return chain;
  }

  /// W_1^T S_1 W_2^T ... S_{H-1} W_H^T written as a chain of the same form.
  FactorChain transposed() const {
    FactorChain t;
    for (auto it = weights.rbegin(); it != weights.rend(); ++it) t.weights.push_back(it->transpose());
    t.grads.assign(grads.rbegin(), grads.rend());
    return t;
  }

  /// Append an identity layer with identity derivative ranges.
  FactorChain with_identity_layer() const {
    FactorChain out = *this;
    const Index n = rows();
    out.grads.push_back(GradRanges::constant(n, 1.0));
    out.weights.push_back(Matrix::Identity(n, n));
    return out;
  }
};

struct BoundPair {
  Matrix lower;
  Matrix upper;
};

enum class Direction { backward, forward };

/// Element-wise bounds on the partial Jacobians of a network.
///
/// Backward: levels[l-1] bounds Y^(-l) = d f / d h^(l-1), so levels.front() is the
/// input Jacobian. Forward: levels[l-1] bounds d f^(l) / d x, so levels.back() is.
struct JacobianBounds {
  std::string method;
  Direction direction = Direction::backward;
  std::vector<BoundPair> levels;

  const BoundPair& level(int l) const { return levels.at(static_cast<std::size_t>(l - 1)); }
  const BoundPair& jacobian() const {
    return direction == Direction::backward ? levels.front() : levels.back();
  }
};

/// W_check and W_hat for one output row.
struct MergedMatrices {
  Matrix w_check;
  Matrix w_hat;
};

enum class Side { lower, upper };

/// Bounds on A S B over every diagonal S with grads.lower <= S <= grads.upper.
inline BoundPair bound_two_layer(const Matrix& a, const Matrix& b, const GradRanges& g) {
  require(a.cols() == b.rows() && g.size() == a.cols(), "bound_two_layer: dimension mismatch");
  const Matrix ap = positive_part(a), an = negative_part(a);
  const Matrix bp = positive_part(b), bn = negative_part(b);
  const auto dl = g.lower.asDiagonal();
  const auto du = g.upper.asDiagonal();
  const Matrix low_p = ap * dl + an * du;  // multiplies B+
  const Matrix low_n = ap * du + an * dl;  // multiplies B-
  const Matrix up_p = ap * du + an * dl;
  const Matrix up_n = ap * dl + an * du;
  return {low_p * bp + low_n * bn, up_p * bp + up_n * bn};
}

inline bool unstable(double lo, double hi) noexcept { return lo < 0.0 && hi > 0.0; }

/// Bounds on the sign-uncertain part of Y S W for every row of [lo, hi].
inline BoundPair term_I_bounds(const Matrix& lo, const Matrix& hi, const Matrix& w, const GradRanges& g) {
  require(lo.cols() == w.rows() && hi.cols() == w.rows() && g.size() == w.rows(),
          "term_I_bounds: dimension mismatch");
  Matrix a = Matrix::Zero(lo.rows(), lo.cols());
  Matrix b = Matrix::Zero(lo.rows(), lo.cols());
  for (Index j = 0; j < lo.rows(); ++j)
    for (Index r = 0; r < lo.cols(); ++r)
      if (unstable(lo(j, r), hi(j, r))) {
        a(j, r) = g.upper(r) * lo(j, r);
        b(j, r) = g.upper(r) * hi(j, r);
      }
  const Matrix wp = positive_part(w), wn = negative_part(w);
  return {a * wp + b * wn, b * wp + a * wn};
}

namespace detail {

/// Pin the sign-fixed rows of V for output row j; unstable rows are zeroed and
/// their term-I contribution is added to `acc`. Returns false if nothing is pinned.
template <typename RowLo, typename RowHi>
bool split_row(const RowLo& lo, const RowHi& hi, const GradRanges& g, const Matrix& v, Side side,
               RowVector& acc, Matrix& pinned) {
  pinned.resize(v.rows(), v.cols());
  bool any = false;
  for (Index r = 0; r < v.rows(); ++r) {
    if (unstable(lo(r), hi(r))) {
      const double a = g.upper(r) * lo(r);
      const double b = g.upper(r) * hi(r);
      for (Index k = 0; k < v.cols(); ++k) {
        const double x = v(r, k);
        if (side == Side::lower)
          acc(k) += x > 0.0 ? a * x : b * x;
        else
          acc(k) += x > 0.0 ? b * x : a * x;
      }
      pinned.row(r).setZero();
      continue;
    }
    const double sign = lo(r) >= 0.0 ? 1.0 : -1.0;
    for (Index k = 0; k < v.cols(); ++k) {
      const double x = v(r, k);
      const bool positive = sign * x > 0.0;
      const double slope = (positive == (side == Side::lower)) ? g.lower(r) : g.upper(r);
      pinned(r, k) = slope * x;
      any = any || pinned(r, k) != 0.0;
    }
  }
  return any;
}

}  // namespace detail

namespace detail {

/// w * pinned, skipping the all-zero rows of `pinned`.
inline Matrix multiply_pinned(const Matrix& w, const Matrix& pinned) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(pinned.rows()));
  for (Index r = 0; r < pinned.rows(); ++r)
    if (!pinned.row(r).isZero(0.0)) rows.push_back(r);
  if (static_cast<Index>(rows.size()) == pinned.rows()) return w * pinned;
  if (rows.empty()) return Matrix::Zero(w.rows(), pinned.cols());
  return w(Eigen::all, rows) * pinned(rows, Eigen::all);
}

}  // namespace detail

/// One-sided bound on row j of Y^(-m-1) S_m V, given bounds on every level above m.
inline RowVector bound_row(const FactorChain& chain, const std::vector<BoundPair>& levels, Index j,
                           int m, Matrix v, Side side) {
  const int depth = chain.depth();
  require(m >= 1 && m < depth, "bound_row: level out of range");
  RowVector acc = RowVector::Zero(v.cols());
  Matrix pinned;
  for (;;) {
    const BoundPair& above = levels[static_cast<std::size_t>(m)];
    const bool any = detail::split_row(above.lower.row(j), above.upper.row(j), chain.g(m), v, side,
                                       acc, pinned);
    if (m + 1 == depth) {
      acc.noalias() += chain.W(depth).row(j) * pinned;
      break;
    }
    if (!any) break;
    v = detail::multiply_pinned(chain.W(m + 1), pinned);
    ++m;
  }
  return acc;
}

/// Both sides of bound_row at once; the sides share V while their pinned matrices agree.
inline BoundPair bound_row_pair(const FactorChain& chain, const std::vector<BoundPair>& levels, Index j,
                                int m, const Matrix& v0) {
  const int depth = chain.depth();
  require(m >= 1 && m < depth, "bound_row: level out of range");
  RowVector acc_lo = RowVector::Zero(v0.cols()), acc_hi = RowVector::Zero(v0.cols());
  Matrix v_lo = v0, v_hi, pin_lo, pin_hi;
  bool shared = true, live_lo = true, live_hi = true;
  for (;;) {
    const BoundPair& above = levels[static_cast<std::size_t>(m)];
    const auto lo = above.lower.row(j);
    const auto hi = above.upper.row(j);
    bool any_lo = false, any_hi = false;
    if (live_lo) any_lo = detail::split_row(lo, hi, chain.g(m), v_lo, Side::lower, acc_lo, pin_lo);
    if (live_hi) any_hi = detail::split_row(lo, hi, chain.g(m), shared ? v_lo : v_hi, Side::upper, acc_hi, pin_hi);
    if (m + 1 == depth) {
      if (live_lo) acc_lo.noalias() += chain.W(depth).row(j) * pin_lo;
      if (live_hi) acc_hi.noalias() += chain.W(depth).row(j) * pin_hi;
      break;
    }
    live_lo = any_lo;
    live_hi = any_hi;
    if (!live_lo && !live_hi) break;
    shared = live_lo && live_hi && pin_lo == pin_hi;
    if (live_hi && !shared) v_hi = detail::multiply_pinned(chain.W(m + 1), pin_hi);
    if (live_lo) v_lo = detail::multiply_pinned(chain.W(m + 1), pin_lo);
    ++m;
  }
  return {acc_lo, acc_hi};
}

/// W_check (lower side) and W_hat (upper side) for row j at level l, 2 <= l <= H.
inline MergedMatrices merged_matrices(Index j, const Matrix& lo, const Matrix& hi, const Matrix& w_l,
                                      const Matrix& w_lm1, const GradRanges& g) {
  require(lo.cols() == w_lm1.rows() && w_l.cols() == w_lm1.rows() && g.size() == w_lm1.rows(),
          "merged_matrices: dimension mismatch");
  RowVector scratch = RowVector::Zero(w_lm1.cols());
  Matrix low, up;
  detail::split_row(lo.row(j), hi.row(j), g, w_lm1, Side::lower, scratch, low);
  detail::split_row(lo.row(j), hi.row(j), g, w_lm1, Side::upper, scratch, up);
  return {w_l * low, w_l * up};
}

/// Bounds on Y^(-l); levels l+1 .. H of `levels` must already be filled.
inline BoundPair compute_lu(const FactorChain& chain, const std::vector<BoundPair>& levels, int l,
                            unsigned threads = 1) {
  const int depth = chain.depth();
  require(l >= 1 && l <= depth, "compute_lu: level out of range");
  if (l == depth) return {chain.W(depth), chain.W(depth)};
  const Index rows = chain.rows();
  const Index cols = chain.W(l).cols();
  BoundPair out{Matrix(rows, cols), Matrix(rows, cols)};
  parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t task) {
    const Index j = static_cast<Index>(task);
    const BoundPair row = bound_row_pair(chain, levels, j, l, chain.W(l));
    out.lower.row(j) = row.lower;
    out.upper.row(j) = row.upper;
  });
  return out;
}

/// All levels of the recursion on an arbitrary chain, deepest first.
inline std::vector<BoundPair> recurjac_levels(const FactorChain& chain, unsigned threads = 1) {
  const int depth = chain.depth();
  std::vector<BoundPair> levels(static_cast<std::size_t>(depth));
  levels[static_cast<std::size_t>(depth - 1)] = {chain.W(depth), chain.W(depth)};
  for (int l = depth - 1; l >= 1; --l)
    levels[static_cast<std::size_t>(l - 1)] = compute_lu(chain, levels, l, threads);
  return levels;
}

inline JacobianBounds recurjac_backward(const Network& net, const LayerIntervals& li, unsigned threads = 1) {
  return {"recurjac-b", Direction::backward, recurjac_levels(FactorChain::from(net, li), threads)};
}

enum class ForwardVariant { f0, f1 };

inline JacobianBounds recurjac_forward(const Network& net, const LayerIntervals& li, ForwardVariant variant,
                                       unsigned threads = 1) {
  const FactorChain chain = FactorChain::from(net, li);
  const int depth = chain.depth();
  FactorChain t = chain.transposed();
  if (variant == ForwardVariant::f1) {
    const Index n1 = chain.W(1).rows();
    t.weights.back() = Matrix::Identity(n1, n1);
  }
  const auto rev = recurjac_levels(t, threads);
  JacobianBounds jb{variant == ForwardVariant::f0 ? "recurjac-f0" : "recurjac-f1", Direction::forward, {}};
  jb.levels.resize(static_cast<std::size_t>(depth));
  const Matrix& w1 = chain.W(1);
  const Matrix w1p = positive_part(w1), w1n = negative_part(w1);
  for (int i = 1; i <= depth; ++i) {
    const BoundPair& src = rev[static_cast<std::size_t>(depth - i)];
    BoundPair& dst = jb.levels[static_cast<std::size_t>(i - 1)];
    if (variant == ForwardVariant::f0) {
      dst = {src.lower.transpose(), src.upper.transpose()};
    } else {
      const Matrix lz = src.lower.transpose(), uz = src.upper.transpose();
      dst = {lz * w1p + uz * w1n, uz * w1p + lz * w1n};
    }
  }
  return jb;
}

/// Layer-by-layer interval product of the backward partials, with no sign fixing.
inline JacobianBounds fastlip(const Network& net, const LayerIntervals& li) {
  const FactorChain chain = FactorChain::from(net, li);
  const int depth = chain.depth();
  JacobianBounds jb{"fastlip", Direction::backward, std::vector<BoundPair>(static_cast<std::size_t>(depth))};
  jb.levels.back() = {chain.W(depth), chain.W(depth)};
  for (int l = depth - 1; l >= 1; --l) {
    const BoundPair& above = jb.levels[static_cast<std::size_t>(l)];
    const GradRanges& g = chain.g(l);
    Matrix a(above.lower.rows(), above.lower.cols()), b(a.rows(), a.cols());
    for (Index j = 0; j < a.rows(); ++j)
      for (Index r = 0; r < a.cols(); ++r) {
        const double lo = above.lower(j, r), hi = above.upper(j, r);
        a(j, r) = lo >= 0.0 ? lo * g.lower(r) : lo * g.upper(r);
        b(j, r) = hi >= 0.0 ? hi * g.upper(r) : hi * g.lower(r);
      }
    const Matrix wp = positive_part(chain.W(l)), wn = negative_part(chain.W(l));
    jb.levels[static_cast<std::size_t>(l - 1)] = {a * wp + b * wn, b * wp + a * wn};
  }
  return jb;
}

/// Product of layer operator norms and activation derivative bounds.
inline double naive_global_lipschitz(const Network& net, Norm p) {
  double value = 1.0;
  for (int l = 1; l <= net.depth(); ++l) {
    value *= induced_norm(net.weights(l), p);
    if (l < net.depth()) value *= net.activation(l).derivative_sup();
  }
  return value;
}

}  // namespace jacobound
