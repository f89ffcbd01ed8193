//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_TESTS_SUPPORT_HPP
#define PNKHB_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/lanczos.hpp"
#include "pnkhb/problems/quadratic.hpp"
#include "pnkhb/solver.hpp"

namespace pnkhb::testing {

using Rng = std::mt19937_64;

inline Vector randn(Index n, Rng &rng) {
  std::normal_distribution<double> d;
  return Vector::NullaryExpr(n, [&](Index) { return d(rng); });
}

inline Matrix randn(Index r, Index c, Rng &rng) {
  std::normal_distribution<double> d;
  return Matrix::NullaryExpr(r, c, [&](Index, Index) { return d(rng); });
}

inline double uniform(double lo, double hi, Rng &rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_orthogonal(Index n, Rng &rng) {
  Eigen::HouseholderQR<Matrix> qr(randn(n, n, rng));
  return qr.householderQ();
}

/// Q diag(ev) Q^T with log-uniform eigenvalues in [1, cond].
inline Matrix random_spd(Index n, double cond, Rng &rng) {
  const Matrix q = random_orthogonal(n, rng);
  Vector ev(n);
  for (Index i = 0; i < n; ++i)
    ev[i] = std::pow(cond, uniform(0, 1, rng));
  Matrix m = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

/// Box around the origin; each bound is infinite with probability p_inf.
inline BoxBounds random_box(Index n, double p_inf, Rng &rng) {
  Vector lo(n), hi(n);
  for (Index i = 0; i < n; ++i) {
    lo[i] = uniform(0, 1, rng) < p_inf ? -kInf : -uniform(0.1, 2, rng);
    hi[i] = uniform(0, 1, rng) < p_inf ? kInf : uniform(0.1, 2, rng);
  }
  return { lo, hi };
}

/// Random T (tridiagonal SPD) and orthonormal V of rank l; H~ as a metric.
inline ShiftedMetric random_metric(Index n, Index l, Rng &rng,
                                   double c = kDefaultShift) {
  ShiftedMetric m;
  m.c = c;
  m.fact.basis = random_orthogonal(n, rng).leftCols(l);
  m.fact.alpha.resize(l);
  m.fact.beta.resize(std::max<Index>(l - 1, 0));
  for (Index i = 0; i + 1 < l; ++i)
    m.fact.beta[i] = uniform(-0.5, 0.5, rng);
  for (Index i = 0; i < l; ++i)
    m.fact.alpha[i] = uniform(1.5, 4, rng);
  m.fact.gamma = 1;
  return m;
}

inline Matrix dense_metric(const ShiftedMetric &m) {
  const Index n = m.dim();
  Matrix out = m.c * Matrix::Identity(n, n);
  if (m.rank() > 0) {
    Matrix core = m.fact.tridiagonal();
    core.diagonal().array() -= m.c;
    out += m.fact.basis * core * m.fact.basis.transpose();
  }
  return out;
}

/// argmin over l <= z <= u of 1/2 (z - y)' M (z - y) by trying every
/// assignment of each coordinate to {free, lower, upper} and keeping the one
/// that satisfies the KKT conditions.
inline Vector enumerate_projection(const Matrix &m, const Vector &y,
                                   const BoxBounds &bounds) {
  const Index n = y.size();
  Index patterns = 1;
  for (Index i = 0; i < n; ++i)
    patterns *= 3;

  Vector best;
  double best_val = std::numeric_limits<double>::infinity();
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  for (Index p = 0; p < patterns; ++p) {
    std::vector<int> state(static_cast<std::size_t>(n));
    Index code = p;
    bool ok = true;
    Vector z = Vector::Zero(n);
    std::vector<Index> free_idx;
    for (Index i = 0; i < n; ++i, code /= 3) {
      const int s = static_cast<int>(code % 3);
      state[static_cast<std::size_t>(i)] = s;
      if (s == 1) {
        ok = ok && bounds.has_lower(i);
        z[i] = bounds.lower(i);
      } else if (s == 2) {
        ok = ok && bounds.has_upper(i);
        z[i] = bounds.upper(i);
      } else {
        free_idx.push_back(i);
      }
    }
    if (!ok)
      continue;
    if (!free_idx.empty()) {
      const Index nf = static_cast<Index>(free_idx.size());
      Matrix mff(nf, nf);
      Vector rhs(nf);
      const Vector mz = m * z;
      const Vector my = m * y;
      for (Index a = 0; a < nf; ++a) {
        rhs[a] = my[free_idx[a]] - mz[free_idx[a]];
        for (Index b = 0; b < nf; ++b)
          mff(a, b) = m(free_idx[a], free_idx[b]);
      }
      const Vector zf = mff.ldlt().solve(rhs);
      for (Index a = 0; a < nf; ++a)
        z[free_idx[a]] = zf[a];
    }
    const Vector g = m * (z - y);
    const double tol = 1e-9 * scale * (1.0 + (z - y).norm());
    for (Index i = 0; i < n && ok; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0)
        ok = z[i] >= bounds.lower(i) - tol && z[i] <= bounds.upper(i) + tol;
      else if (s == 1)
        ok = g[i] >= -tol;
      else
        ok = g[i] <= tol;
    }
    if (!ok)
      continue;
    const double val = 0.5 * (z - y).dot(m * (z - y));
    if (val < best_val) {
      best_val = val;
      best = z;
    }
  }
  return best;
}

/// Reference minimizer of 1/2 x'Hx + b'x over a box: accelerated projected
/// gradient followed by an exact solve on the identified free set, repeated
/// until the KKT conditions hold to 1e-12.
inline Vector reference_box_qp(const Matrix &h, const Vector &b,
                               const BoxBounds &bounds) {
  const Index n = b.size();
  const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues()(n - 1);
  Vector x = bounds.clamp(Vector::Zero(n)), x_prev = x, yk = x;
  double t = 1;
  auto kkt = [&](const Vector &z) {
    return (z - bounds.clamp(z - (h * z + b))).lpNorm<Eigen::Infinity>();
  };
  for (int round = 0; round < 50; ++round) {
    for (int it = 0; it < 2000; ++it) {
      x = bounds.clamp(yk - (h * yk + b) / lip);
      const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
      yk = x + ((t - 1) / t_next) * (x - x_prev);
      x_prev = x;
      t = t_next;
    }
    std::vector<Index> free_idx;
    Vector z = x;
    for (Index i = 0; i < n; ++i)
      if (x[i] > bounds.lower(i) && x[i] < bounds.upper(i))
        free_idx.push_back(i);
    if (!free_idx.empty()) {
      const Index nf = static_cast<Index>(free_idx.size());
      Matrix hff(nf, nf);
      Vector rhs(nf);
      Vector fixed = x;
      for (Index i: free_idx)
        fixed[i] = 0;
      const Vector hfix = h * fixed;
      for (Index a = 0; a < nf; ++a) {
        rhs[a] = -b[free_idx[a]] - hfix[free_idx[a]];
        for (Index c = 0; c < nf; ++c)
          hff(a, c) = h(free_idx[a], free_idx[c]);
      }
      const Vector zf = hff.ldlt().solve(rhs);
      for (Index a = 0; a < nf; ++a)
        z[free_idx[a]] = zf[a];
    }
    if (bounds.contains(z) && kkt(z) < 1e-12)
      return z;
    if (kkt(x) < 1e-12)
      return x;
  }
  return x;
}

inline QuadraticBoxProblem random_box_qp(Index n, double cond, Rng &rng) {
  QuadraticBoxProblem q;
  q.hessian = random_spd(n, cond, rng);
  q.b = 3.0 * randn(n, rng);
  q.bounds = BoxBounds::uniform(n, -1, 1);
  q.x0 = Vector::Zero(n);
  return q;
}

/// Checks orthonormality, subspace consistency and the SPD lower bound of a
/// shifted Krylov metric. Returns a description of the first violation, or
/// an empty string.
inline std::string audit_metric(const ShiftedMetric &m, Rng &rng) {
  const Index l = m.rank();
  if (l == 0)
    return {};
  const Matrix &v = m.fact.basis;
  const double ortho =
      (v.transpose() * v - Matrix::Identity(l, l)).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-10))
    return "orthonormality " + std::to_string(ortho);

  const Matrix t = m.fact.tridiagonal();
  const double tscale = 1.0 + t.cwiseAbs().maxCoeff();
  const Vector coeff = randn(l, rng);
  const Vector in_range = v * coeff;
  const double consistency =
      (apply_metric(m, in_range) - v * (t * coeff)).norm()
      / (tscale * (1.0 + in_range.norm()));
  if (!(consistency <= 1e-10))
    return "subspace consistency " + std::to_string(consistency);

  const double floor = m.min_eigenvalue();
  for (int k = 0; k < 5; ++k) {
    const Vector u = randn(m.dim(), rng);
    const double q = u.dot(apply_metric(m, u));
    if (!(q >= floor * u.squaredNorm() - 1e-10 * tscale * u.squaredNorm()))
      return "spd lower bound";
  }
  return {};
}

/// Observer that checks the per-iteration invariants of every accepted step:
/// feasibility, strict decrease, the Armijo test, and (for one-metric steps)
/// the descent inequality g'd <= -(1/mu) d'H~d + slack.
struct InvariantAuditor {
  std::int64_t steps = 0;
  std::int64_t descent_checks = 0;
  std::int64_t metric_checks = 0;
  std::vector<std::string> violations;
  const BoxBounds *bounds = nullptr;
  Rng rng { 17 };

  explicit InvariantAuditor(const BoxBounds *b = nullptr): bounds(b) {}

  void record(const IterationView &v, const std::string &what) {
    violations.push_back(std::string(to_string(v.method)) + " k="
                         + std::to_string(v.k) + ": " + what);
  }

  void operator()(const IterationView &v) {
    ++steps;
    const Vector d = v.x_next - v.x_prev;
    if (bounds && !bounds->contains(v.x_next))
      record(v, "infeasible iterate");
    if (!(v.f_next < v.f_prev))
      record(v, "f not strictly decreasing");
    if (!(v.f_next < v.f_prev + v.alpha * v.grad_prev.dot(d)))
      record(v, "armijo");

    const double slack =
        100 * v.ipm_tol * (1 + d.norm()) * v.grad_prev.norm();
    if (v.method == Method::projected_gradient) {
      ++descent_checks;
      if (!(v.grad_prev.dot(d) <= -d.squaredNorm() / v.mu + slack))
        record(v, "descent (identity metric)");
    } else if (v.one_metric && v.metric) {
      ++descent_checks;
      const double quad = d.dot(v.metric->apply(d));
      if (!(v.grad_prev.dot(d) <= -quad / v.mu + slack))
        record(v, "descent (Krylov metric)");
    }
    if (v.metric) {
      ++metric_checks;
      const std::string why = audit_metric(v.metric->inactive, rng);
      if (!why.empty())
        record(v, why);
      if (!(v.metric->nu > 0))
        record(v, "nu not positive");
    }
  }

  IterationObserver observer() {
    return [this](const IterationView &v) { (*this)(v); };
  }
};

} // namespace pnkhb::testing

#endif // PNKHB_TESTS_SUPPORT_HPP
