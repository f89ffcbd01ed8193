//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_OPERATORS_HPP
#define PNKHB_OPERATORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"

namespace pnkhb {

/// Matrix-free symmetric operator v -> G v.
///
/// Operators are immutable once built; apply() never mutates shared state
/// and may be called concurrently and out of order.
class HessianOperator {
public:
  using ApplyFn = std::function<Vector(const Vector &)>;

  HessianOperator() = default;

  HessianOperator(Index n, ApplyFn fn): n_(n), fn_(std::move(fn)) {
    if (n_ <= 0)
      throw std::invalid_argument("HessianOperator: dimension must be > 0");
    if (!fn_)
      throw std::invalid_argument("HessianOperator: empty apply function");
  }

  Index dim() const { return n_; }

  Vector apply(const Vector &v) const {
    if (v.size() != n_)
      throw std::invalid_argument("HessianOperator: dimension mismatch");
    return fn_(v);
  }

  Vector operator()(const Vector &v) const { return apply(v); }

  explicit operator bool() const { return static_cast<bool>(fn_); }

private:
  Index n_ = 0;
  ApplyFn fn_;
};

/// Smooth objective over a box: value, gradient and (approximate) Hessian
/// operator at a point.
struct ObjectiveProblem {
  Index n = 0;
  std::function<double(const Vector &)> value;
  std::function<Vector(const Vector &)> gradient;
  std::function<HessianOperator(const Vector &)> hessian_at;
  BoxBounds bounds;
};

inline HessianOperator dense_operator(Matrix m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("dense_operator: matrix must be square");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("dense_operator: matrix is not symmetric");

  auto shared = std::make_shared<const Matrix>(std::move(m));
  return { shared->rows(), [shared](const Vector &v) -> Vector {
            return (*shared) * v;
          } };
}

/// G = Jt J + gamma * R, with J given by its forward and adjoint products
/// and R a symmetric positive semidefinite regularizer.
inline HessianOperator
gauss_newton_operator(Index n, Index residual_dim,
                      std::function<Vector(const Vector &)> j_apply,
                      std::function<Vector(const Vector &)> jt_apply,
                      std::function<Vector(const Vector &)> regularizer_apply,
                      double gamma) {
  if (gamma < 0)
    throw std::invalid_argument("gauss_newton_operator: gamma must be >= 0");
  if (!j_apply || !jt_apply)
    throw std::invalid_argument("gauss_newton_operator: missing Jacobian");
  if (gamma > 0 && !regularizer_apply)
    throw std::invalid_argument("gauss_newton_operator: missing regularizer");

  return { n, [=](const Vector &v) -> Vector {
            Vector jv = j_apply(v);
            if (jv.size() != residual_dim)
              throw std::invalid_argument(
                  "gauss_newton_operator: J output dimension mismatch");
            Vector out = jt_apply(jv);
            if (out.size() != n)
              throw std::invalid_argument(
                  "gauss_newton_operator: J^T output dimension mismatch");
            if (gamma > 0) {
              Vector rv = regularizer_apply(v);
              if (rv.size() != n)
                throw std::invalid_argument(
                    "gauss_newton_operator: regularizer dimension mismatch");
              out += gamma * rv;
            }
            return out;
          } };
}

/// (A kron B) acting on vec(X) as vec(B X A^T), for symmetric A (p x p) and
/// B (q x q); never forms the Kronecker product.
inline HessianOperator kronecker_operator(Matrix a, Matrix b) {
  if (a.rows() != a.cols() || b.rows() != b.cols())
    throw std::invalid_argument("kronecker_operator: factors must be square");
  auto sa = std::make_shared<const Matrix>(std::move(a));
  auto sb = std::make_shared<const Matrix>(std::move(b));
  const Index p = sa->rows(), q = sb->rows();
  return { p * q, [sa, sb, p, q](const Vector &v) -> Vector {
            Eigen::Map<const Matrix> x(v.data(), q, p);
            Matrix y = (*sb) * x * sa->transpose();
            return Eigen::Map<const Vector>(y.data(), p * q);
          } };
}

/// Largest relative symmetry defect |u'Gv - v'Gu| / (|u||v| |G|_est) over
/// random probe pairs.
inline double symmetry_defect(const HessianOperator &op, int pairs = 20,
                              std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Index n = op.dim();
  double worst = 0;
  for (int k = 0; k < pairs; ++k) {
    Vector u = Vector::NullaryExpr(n, [&](Index) { return normal(rng); });
    Vector v = Vector::NullaryExpr(n, [&](Index) { return normal(rng); });
    Vector gu = op.apply(u), gv = op.apply(v);
    const double norm_est =
        std::max(gu.norm() / u.norm(), gv.norm() / v.norm());
    const double denom = u.norm() * v.norm() * std::max(norm_est, 1e-300);
    worst = std::max(worst, std::abs(u.dot(gv) - v.dot(gu)) / denom);
  }
  return worst;
}

struct GradientCheckOptions {
  int directions = 10;
  std::array<double, 3> steps = { 1e-4, 1e-5, 1e-6 };
  std::uint64_t seed = 7;
};

/// Central-difference gradient check. Returns the largest relative mismatch
/// between the directional derivative and grad'd over random unit
/// directions, using the best step per direction.
inline double check_gradient(const ObjectiveProblem &problem, const Vector &x,
                             const GradientCheckOptions &opts = {}) {
  if (x.size() != problem.n)
    throw std::invalid_argument("check_gradient: dimension mismatch");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;

  const Vector g = problem.gradient(x);
  double worst = 0;
  for (int k = 0; k < opts.directions; ++k) {
    Vector d = Vector::NullaryExpr(problem.n, [&](Index) { return normal(rng); });
    d.normalize();
    const double gd = g.dot(d);
    double best = std::numeric_limits<double>::infinity();
    for (double h: opts.steps) {
      const double fd =
          (problem.value(x + h * d) - problem.value(x - h * d)) / (2 * h);
      best = std::min(best, std::abs(fd - gd) / (std::abs(gd) + 1e-12));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

} // namespace pnkhb

#endif // PNKHB_OPERATORS_HPP
