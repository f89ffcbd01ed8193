//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_LANCZOS_HPP
#define PNKHB_LANCZOS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "pnkhb/operators.hpp"

namespace pnkhb {

inline constexpr double kDefaultShift = 1e-3;

/// Thrown by lanczos_tridiag when the seed vector is zero, i.e. the gradient
/// is already stationary.
class StationarySeedError: public std::domain_error {
public:
  StationarySeedError()
      : std::domain_error("lanczos_tridiag: zero seed (stationary gradient)") { }
};

/// Rank-l Krylov factorization G ~ V T V^T with T symmetric tridiagonal.
struct KrylovFactorization {
  Matrix basis;     // n x l, orthonormal columns
  Vector alpha;     // diagonal of T, length l
  Vector beta;      // off-diagonal of T, length max(l-1, 0)
  double gamma = 0; // norm of the seed
  bool breakdown = false;
  bool curvature_truncated = false;
  bool curvature_floored = false;

  Index dim() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }

  Matrix tridiagonal() const {
    const Index l = rank();
    Matrix t = Matrix::Zero(l, l);
    t.diagonal() = alpha;
    if (l > 1) {
      t.diagonal(1) = beta;
      t.diagonal(-1) = beta;
    }
    return t;
  }

  /// A factorization carrying no curvature; its metric is c * I.
  static KrylovFactorization empty(Index n) {
    KrylovFactorization f;
    f.basis.resize(n, 0);
    return f;
  }
};

/// T x for a symmetric tridiagonal T given by (alpha, beta).
inline Vector tridiagonal_multiply(const Vector &alpha, const Vector &beta,
                                   const Vector &x) {
  const Index l = alpha.size();
  Vector y = alpha.cwiseProduct(x);
  for (Index i = 0; i + 1 < l; ++i) {
    y[i] += beta[i] * x[i + 1];
    y[i + 1] += beta[i] * x[i];
  }
  return y;
}

inline double tridiagonal_min_eigenvalue(const Vector &alpha,
                                         const Vector &beta) {
  if (alpha.size() == 0)
    throw std::invalid_argument("tridiagonal_min_eigenvalue: empty matrix");
  if (alpha.size() == 1)
    return alpha[0];
  // computeFromTridiagonal does not rescale its input the way compute() does
  const double scale =
      std::max(alpha.cwiseAbs().maxCoeff(), beta.cwiseAbs().maxCoeff());
  if (!(scale > 0))
    return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(alpha / scale, beta / scale,
                            Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("tridiagonal_min_eigenvalue: no convergence");
  return scale * es.eigenvalues().minCoeff();
}

/// LDL^T factorization of a symmetric tridiagonal matrix, O(l) to factor
/// and to solve. No pivoting: intended for definite matrices.
class TridiagonalLdlt {
public:
  TridiagonalLdlt(const Vector &alpha, const Vector &beta)
      : d_(alpha.size()), l_(std::max<Index>(alpha.size() - 1, 0)) {
    const Index n = alpha.size();
    for (Index i = 0; i < n; ++i) {
      d_[i] = alpha[i];
      if (i > 0) {
        l_[i - 1] = beta[i - 1] / d_[i - 1];
        d_[i] -= l_[i - 1] * beta[i - 1];
      }
      if (!(std::abs(d_[i]) > 0) || !std::isfinite(d_[i]))
        throw std::domain_error("TridiagonalLdlt: singular tridiagonal matrix");
    }
  }

  Vector solve(const Vector &b) const {
    const Index n = d_.size();
    Vector x = b;
    for (Index i = 1; i < n; ++i)
      x[i] -= l_[i - 1] * x[i - 1];
    x.array() /= d_.array();
    for (Index i = n - 2; i >= 0; --i)
      x[i] -= l_[i] * x[i + 1];
    return x;
  }

  const Vector &pivots() const { return d_; }

private:
  Vector d_;
  Vector l_;
};

struct LanczosOptions {
  double breakdown_tol = 1e-12;
  /// Curvature guard threshold; steps that push eigmin(T) to or below this
  /// value are discarded. Use the metric shift c here.
  double curvature_floor = kDefaultShift;
  bool curvature_guard = true;
};

/// Lanczos tridiagonalization of op started from seed, with full
/// reorthogonalization at every step.
///
/// Stops early on breakdown (invariant subspace found) or when the next step
/// would make eigmin(T) <= curvature_floor; in the latter case the offending
/// step is dropped. If the very first Rayleigh quotient fails the guard, the
/// rank-1 factorization is kept with alpha_1 raised to
/// max(|alpha_1|, 2 * curvature_floor).
inline KrylovFactorization lanczos_tridiag(const HessianOperator &op,
                                    const Vector &seed, Index max_rank,
                                    const LanczosOptions &opts = {}) {
  const Index n = op.dim();
  if (seed.size() != n)
    throw std::invalid_argument("lanczos_tridiag: seed dimension mismatch");
  if (max_rank < 1 || max_rank > n)
    throw std::invalid_argument("lanczos_tridiag: need 1 <= max_rank <= n");
  const double gamma = seed.norm();
  if (!(gamma > 0))
    throw StationarySeedError();

  Matrix q(n, max_rank);
  Vector alpha(max_rank), beta(max_rank);
  q.col(0) = seed / gamma;

  KrylovFactorization fact;
  fact.gamma = gamma;
  Index rank = 0;
  double op_scale = 0;

  for (Index j = 0; j < max_rank; ++j) {
    Vector w = op.apply(q.col(j));
    double a = q.col(j).dot(w);
    w -= a * q.col(j);
    if (j > 0)
      w -= beta[j - 1] * q.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      auto basis = q.leftCols(j + 1);
      Vector coeff = basis.transpose() * w;
      w -= basis * coeff;
      a += coeff[j];
    }

    alpha[j] = a;
    if (opts.curvature_guard) {
      const double lam =
          tridiagonal_min_eigenvalue(alpha.head(j + 1), beta.head(j));
      if (lam <= opts.curvature_floor) {
        if (j == 0) {
          alpha[0] = std::max(std::abs(a), 2 * opts.curvature_floor);
          fact.curvature_floored = true;
          rank = 1;
        } else {
          fact.curvature_truncated = true;
        }
        break;
      }
    }
    rank = j + 1;
    op_scale = std::max(op_scale, std::abs(a) + (j > 0 ? beta[j - 1] : 0.0));
    if (j + 1 == max_rank)
      break;

    const double b = w.norm();
    if (b <= opts.breakdown_tol * std::max(op_scale + b, 1e-300)) {
      fact.breakdown = true;
      break;
    }
    beta[j] = b;
    q.col(j + 1) = w / b;
  }

  fact.basis = q.leftCols(rank);
  fact.alpha = alpha.head(rank);
  fact.beta = beta.head(std::max<Index>(rank - 1, 0));
  return fact;
}

/// V T^{-1} V^T v, the pseudoinverse of the low-rank approximation.
inline Vector apply_pseudoinverse(const KrylovFactorization &fact,
                                  const Vector &v) {
  if (v.size() != fact.dim())
    throw std::invalid_argument("apply_pseudoinverse: dimension mismatch");
  if (fact.rank() == 0)
    return Vector::Zero(v.size());
  TridiagonalLdlt ldlt(fact.alpha, fact.beta);
  return fact.basis * ldlt.solve(fact.basis.transpose() * v);
}

/// H~ = V (T - cI) V^T + c I: equals V T V^T on range(V) and c I on its
/// orthogonal complement.
struct ShiftedMetric {
  KrylovFactorization fact;
  double c = kDefaultShift;

  Index dim() const { return fact.dim(); }
  Index rank() const { return fact.rank(); }

  /// Lower bound min(c, eigmin(T)) on the spectrum of H~; exact whenever
  /// range(V) is a proper subspace.
  double min_eigenvalue() const {
    if (rank() == 0)
      return c;
    return std::min(c, tridiagonal_min_eigenvalue(fact.alpha, fact.beta));
  }
};

inline Vector apply_metric(const ShiftedMetric &metric, const Vector &v) {
  if (v.size() != metric.dim())
    throw std::invalid_argument("apply_metric: dimension mismatch");
  Vector out = metric.c * v;
  if (metric.rank() == 0)
    return out;
  Vector coeff = metric.fact.basis.transpose() * v;
  Vector core = tridiagonal_multiply(metric.fact.alpha, metric.fact.beta, coeff)
                - metric.c * coeff;
  out.noalias() += metric.fact.basis * core;
  return out;
}

} // namespace pnkhb

#endif // PNKHB_LANCZOS_HPP
