#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>

#include "jacobound/error.hpp"

namespace jacobound {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// The three l_p norms the library can evaluate.
enum class Norm { l1, l2, linf };

inline std::string to_string(Norm p) {
  switch (p) {
    case Norm::l1: return "1";
    case Norm::l2: return "2";
    case Norm::linf: return "inf";
  }
  return "?";
}

inline Norm parse_norm(std::string_view text) {
  if (text == "1") return Norm::l1;
  if (text == "2") return Norm::l2;
  if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") return Norm::linf;
  throw DomainError("unsupported norm '" + std::string(text) + "' (expected 1, 2 or inf)");
}

/// Hölder conjugate: 1 <-> inf, 2 <-> 2.
constexpr Norm dual(Norm p) {
  switch (p) {
    case Norm::l1: return Norm::linf;
    case Norm::l2: return Norm::l2;
    case Norm::linf: return Norm::l1;
  }
  return Norm::l2;
}

template <typename Derived>
double vector_norm(const Eigen::MatrixBase<Derived>& v, Norm p) {
  switch (p) {
    case Norm::l1: return v.template lpNorm<1>();
    case Norm::l2: return v.norm();
    case Norm::linf: return v.size() == 0 ? 0.0 : v.template lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

/// Operator norm induced by `p` on both sides. Exact for every supported p
/// (the l2 case goes through a singular value decomposition).
template <typename Derived>
double induced_norm(const Eigen::MatrixBase<Derived>& a, Norm p) {
  if (a.size() == 0) return 0.0;
  switch (p) {
    case Norm::l1: return a.cwiseAbs().colwise().sum().maxCoeff();
    case Norm::linf: return a.cwiseAbs().rowwise().sum().maxCoeff();
    case Norm::l2: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.template cast<double>().eval());
      return svd.singularValues()(0);
    }
  }
  return 0.0;
}

inline Matrix positive_part(const Matrix& a) { return a.cwiseMax(0.0); }
inline Matrix negative_part(const Matrix& a) { return a.cwiseMin(0.0); }

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
  return a.allFinite();
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace jacobound
