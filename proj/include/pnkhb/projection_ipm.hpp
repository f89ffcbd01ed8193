//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_PROJECTION_IPM_HPP
#define PNKHB_PROJECTION_IPM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/lanczos.hpp"

namespace pnkhb {

/// Symmetric M = V C V^T + c I with V n x l (not necessarily orthonormal)
/// and C a dense symmetric l x l core.
///
/// ShiftedMetric maps onto this with C = T - cI; eliminating fixed
/// coordinates keeps the form but drops rows of V.
struct LowRankPlusShift {
  Matrix basis;
  Matrix core;
  double c = kDefaultShift;

  static LowRankPlusShift from(const ShiftedMetric &metric) {
    LowRankPlusShift m;
    m.basis = metric.fact.basis;
    m.core = metric.fact.tridiagonal();
    m.core.diagonal().array() -= metric.c;
    m.c = metric.c;
    return m;
  }

  Index dim() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }

  Vector apply(const Vector &v) const {
    Vector out = c * v;
    if (rank() > 0)
      out.noalias() += basis * (core * (basis.transpose() * v));
    return out;
  }

  Matrix dense() const {
    Matrix m = basis * core * basis.transpose();
    m.diagonal().array() += c;
    return m;
  }

  template <class IndexRange>
  LowRankPlusShift rows(const IndexRange &idx) const {
    LowRankPlusShift out;
    out.basis.resize(static_cast<Index>(std::size(idx)), rank());
    Index k = 0;
    for (auto i: idx)
      out.basis.row(k++) = basis.row(i);
    out.core = core;
    out.c = c;
    return out;
  }
};

/// Solves (V C V^T + E) x = rhs for diagonal E > 0 via the Woodbury
/// identity; the inner l x l system (C^{-1} + V^T E^{-1} V) is factored
/// densely. C^{-1} is computed once per metric.
class WoodburySolver {
public:
  explicit WoodburySolver(LowRankPlusShift metric): m_(std::move(metric)) {
    const Index l = m_.rank();
    trivial_ = l == 0 || m_.core.cwiseAbs().maxCoeff() == 0.0;
    if (trivial_)
      return;
    Eigen::FullPivLU<Matrix> lu(m_.core);
    if (!lu.isInvertible())
      throw std::domain_error("woodbury_solve: singular low-rank core");
    core_inv_ = lu.inverse();
    core_inv_ = 0.5 * (core_inv_ + core_inv_.transpose());
  }

  const LowRankPlusShift &metric() const { return m_; }

  Vector solve(const Vector &e_diag, const Vector &rhs) const {
    const Index n = m_.dim();
    if (e_diag.size() != n || rhs.size() != n)
      throw std::invalid_argument("woodbury_solve: dimension mismatch");
    if (!(e_diag.array() > 0).all())
      throw std::domain_error("woodbury_solve: E must be positive");

    const Vector e_inv = e_diag.cwiseInverse();
    Vector x = e_inv.cwiseProduct(rhs);
    if (trivial_)
      return x;

    const Matrix &v = m_.basis;
    Matrix scaled = e_inv.asDiagonal() * v; // E^{-1} V
    Matrix inner = core_inv_;
    inner.noalias() += v.transpose() * scaled;
    Eigen::LDLT<Matrix> ldlt(inner);
    if (ldlt.info() != Eigen::Success)
      throw std::domain_error("woodbury_solve: singular inner system");
    Vector coeff = ldlt.solve(v.transpose() * x);
    if (!coeff.allFinite())
      throw std::domain_error("woodbury_solve: singular inner system");
    x.noalias() -= scaled * coeff;
    return x;
  }

private:
  LowRankPlusShift m_;
  Matrix core_inv_;
  bool trivial_ = true;
};

/// (V(T - cI)V^T + E)^{-1} rhs for a shifted Krylov metric.
inline Vector woodbury_solve(const ShiftedMetric &metric, const Vector &e_diag,
                             const Vector &rhs) {
  return WoodburySolver(LowRankPlusShift::from(metric)).solve(e_diag, rhs);
}

/// Largest beta in (0, 1] with v + beta dv >= (1 - tau) v.
inline double fraction_to_boundary(const Vector &v, const Vector &dv,
                                   double tau) {
  double beta = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0)
      beta = std::min(beta, -tau * v[i] / dv[i]);
  return beta;
}

struct IpmConfig {
  double sigma = 0.1;
  double tau = 0.995;
  double tol = 1e-10;
  int max_iter = 200;
  bool warm_start = true;
  bool polish = true;

  void validate() const {
    if (!(sigma >= 0 && sigma <= 1))
      throw std::invalid_argument("IpmConfig: sigma must lie in [0, 1]");
    if (!(tau > 0 && tau <= 1))
      throw std::invalid_argument("IpmConfig: tau must lie in (0, 1]");
    if (!(tol > 0))
      throw std::invalid_argument("IpmConfig: tol must be positive");
    if (max_iter < 1)
      throw std::invalid_argument("IpmConfig: max_iter must be positive");
  }
};

/// Rows of K z - b >= 0 for the finite bounds only: a lower bound on
/// coordinate i gives (+1, l_i), an upper bound gives (-1, -u_i).
struct ConstraintRows {
  std::vector<Index> coord;
  Vector sign;
  Vector offset;

  static ConstraintRows from(const BoxBounds &bounds) {
    ConstraintRows k;
    std::vector<double> s, b;
    for (Index i = 0; i < bounds.size(); ++i) {
      if (bounds.has_lower(i)) {
        k.coord.push_back(i);
        s.push_back(1.0);
        b.push_back(bounds.lower(i));
      }
      if (bounds.has_upper(i)) {
        k.coord.push_back(i);
        s.push_back(-1.0);
        b.push_back(-bounds.upper(i));
      }
    }
    k.sign = Eigen::Map<Vector>(s.data(), static_cast<Index>(s.size()));
    k.offset = Eigen::Map<Vector>(b.data(), static_cast<Index>(b.size()));
    return k;
  }

  Index size() const { return static_cast<Index>(coord.size()); }

  Vector multiply(const Vector &z) const { // K z
    Vector out(size());
    for (Index r = 0; r < size(); ++r)
      out[r] = sign[r] * z[coord[r]];
    return out;
  }

  Vector multiply_transpose(const Vector &y, Index n) const { // K^T y
    Vector out = Vector::Zero(n);
    for (Index r = 0; r < size(); ++r)
      out[coord[r]] += sign[r] * y[r];
    return out;
  }

  Vector gram_diagonal(const Vector &d, Index n) const { // diag(K^T D K)
    Vector out = Vector::Zero(n);
    for (Index r = 0; r < size(); ++r)
      out[coord[r]] += d[r];
    return out;
  }
};

/// Primal/slack/multiplier triplet of the projection subproblem.
struct IpmState {
  Vector z;
  Vector w;
  Vector lambda;

  double duality_measure() const {
    return w.size() == 0 ? 0.0 : w.dot(lambda) / static_cast<double>(w.size());
  }
};

struct IpmStep {
  Vector dz, dw, dlambda;
  Vector r; // dual residual H~z - q - K^T lambda
  Vector v; // primal residual K z - b - w
};

/// One primal-dual Newton step for min 1/2 z'Mz - q'z s.t. K z - b >= 0.
inline IpmStep ipm_step(const WoodburySolver &solver, const IpmState &state,
                        const Vector &q, const ConstraintRows &rows,
                        double sigma) {
  const LowRankPlusShift &m = solver.metric();
  const Index n = m.dim();
  IpmStep s;
  s.r = m.apply(state.z) - q - rows.multiply_transpose(state.lambda, n);
  s.v = rows.multiply(state.z) - rows.offset - state.w;

  const double sxi = sigma * state.duality_measure();
  const Vector ratio = state.lambda.cwiseQuotient(state.w); // W^{-1} Lambda
  const Vector p = ratio.cwiseProduct(-s.v - state.w)
                   + sxi * state.w.cwiseInverse();
  Vector e = rows.gram_diagonal(ratio, n);
  e.array() += m.c;

  s.dz = solver.solve(e, -s.r + rows.multiply_transpose(p, n));
  const Vector kdz = rows.multiply(s.dz);
  s.dlambda = p - ratio.cwiseProduct(kdz);
  s.dw = kdz + s.v;
  return s;
}

struct IpmReport {
  int iterations = 0;
  double primal_residual = 0;   // |v|_2
  double dual_residual = 0;     // |r|_2
  double complementarity = 0;   // max_i w_i lambda_i
  bool converged = false;
  bool polished = false;
};

struct ProjectionResult {
  Vector z;
  IpmReport report;
  IpmState state;
};

namespace internal {
  inline IpmState initial_state(const Vector &start, const BoxBounds &bounds,
                                const ConstraintRows &rows,
                                const IpmState *warm) {
    const Index n = bounds.size();
    IpmState s;
    Vector lo = bounds.lower(), hi = bounds.upper();
    for (Index i = 0; i < n; ++i) {
      if (!bounds.has_lower(i) && !bounds.has_upper(i))
        continue;
      const double delta = std::min(1.0, hi[i] - lo[i]) / 100;
      lo[i] += delta;
      hi[i] -= delta;
    }
    const bool use_warm = warm != nullptr && warm->z.size() == n
                          && warm->lambda.size() == rows.size();
    s.z = (use_warm ? warm->z : start).cwiseMin(hi).cwiseMax(lo);
    s.w = rows.multiply(s.z) - rows.offset;
    if (use_warm) {
      constexpr double floor = 1e-2;
      s.lambda = warm->lambda.cwiseMax(floor);
    } else {
      s.lambda = Vector::Ones(rows.size());
    }
    return s;
  }
} // namespace internal

namespace internal {
  /// Guesses the active set from the IPM iterate (slack below multiplier),
  /// pins those coordinates and solves the free block exactly. Returns the
  /// result only if it is feasible and the multipliers have the right sign.
  inline std::optional<Vector> polish(const LowRankPlusShift &m,
                                      const Vector &q, const IpmState &s,
                                      const ConstraintRows &rows,
                                      const BoxBounds &bounds) {
    const Index n = m.dim();
    std::vector<signed char> at(static_cast<std::size_t>(n), 0);
    Vector z = Vector::Zero(n);
    for (Index r = 0; r < rows.size(); ++r) {
      if (!(s.w[r] < s.lambda[r]))
        continue;
      const Index i = rows.coord[r];
      auto &a = at[static_cast<std::size_t>(i)];
      if (a != 0) // both bounds claim it; leave to the IPM
        return std::nullopt;
      a = rows.sign[r] > 0 ? -1 : 1;
      z[i] = a < 0 ? bounds.lower(i) : bounds.upper(i);
    }
    std::vector<Index> free_idx;
    for (Index i = 0; i < n; ++i)
      if (at[static_cast<std::size_t>(i)] == 0)
        free_idx.push_back(i);

    if (!free_idx.empty()) {
      Vector rhs(static_cast<Index>(free_idx.size()));
      for (std::size_t k = 0; k < free_idx.size(); ++k)
        rhs[static_cast<Index>(k)] = q[free_idx[k]];
      if (m.rank() > 0) {
        // subtract M_FA z_A; the shift part does not couple coordinates
        const Vector coupling = m.core * (m.basis.transpose() * z);
        for (std::size_t k = 0; k < free_idx.size(); ++k)
          rhs[static_cast<Index>(k)] -= m.basis.row(free_idx[k]).dot(coupling);
      }
      const Vector zf =
          WoodburySolver(m.rows(free_idx))
              .solve(Vector::Constant(rhs.size(), m.c), rhs);
      for (std::size_t k = 0; k < free_idx.size(); ++k)
        z[free_idx[k]] = zf[static_cast<Index>(k)];
    }
    if (!z.allFinite())
      return std::nullopt;

    const Vector grad = m.apply(z) - q;
    const double gscale = 1.0 + grad.lpNorm<Eigen::Infinity>();
    const double xscale = 1.0 + z.lpNorm<Eigen::Infinity>();
    constexpr double rel = 1e-10;
    for (Index i = 0; i < n; ++i) {
      switch (at[static_cast<std::size_t>(i)]) {
      case -1:
        if (grad[i] < -rel * gscale)
          return std::nullopt;
        break;
      case 1:
        if (grad[i] > rel * gscale)
          return std::nullopt;
        break;
      default:
        if (z[i] < bounds.lower(i) - rel * xscale
            || z[i] > bounds.upper(i) + rel * xscale)
          return std::nullopt;
      }
    }
    return bounds.clamp(z);
  }
} // namespace internal

/// Interior point solve of min 1/2 z'Mz - q'z over a box with no fixed
/// coordinates. The returned z is clamped to the box.
inline ProjectionResult solve_box_qp(const WoodburySolver &solver,
                                     const Vector &q, const Vector &start,
                                     const BoxBounds &bounds,
                                     const IpmConfig &cfg,
                                     const IpmState *warm = nullptr) {
  cfg.validate();
  const Index n = solver.metric().dim();
  const ConstraintRows rows = ConstraintRows::from(bounds);
  ProjectionResult res;

  if (rows.size() == 0) {
    res.z = solver.solve(Vector::Constant(n, solver.metric().c), q);
    res.report.converged = true;
    res.state.z = res.z;
    return res;
  }

  IpmState s = internal::initial_state(start, bounds, rows, warm);
  for (int j = 0;; ++j) {
    IpmStep step = ipm_step(solver, s, q, rows, cfg.sigma);
    res.report.dual_residual = step.r.norm();
    res.report.primal_residual = step.v.norm();
    res.report.complementarity = s.w.cwiseProduct(s.lambda).maxCoeff();
    res.report.iterations = j;
    if (res.report.dual_residual < cfg.tol
        && res.report.primal_residual < cfg.tol
        && res.report.complementarity < cfg.tol) {
      res.report.converged = true;
      break;
    }
    if (j == cfg.max_iter)
      break;

    const double beta =
        std::min(fraction_to_boundary(s.w, step.dw, cfg.tau),
                 fraction_to_boundary(s.lambda, step.dlambda, cfg.tau));
    if (!(beta > 0) || !step.dz.allFinite())
      break;
    s.z += beta * step.dz;
    s.w += beta * step.dw;
    s.lambda += beta * step.dlambda;
  }

  res.z = bounds.clamp(s.z);
  if (cfg.polish)
    if (auto z = internal::polish(solver.metric(), q, s, rows, bounds)) {
      res.z = std::move(*z);
      res.report.polished = true;
    }
  res.state = std::move(s);
  return res;
}

/// Projection of y onto the box in the norm induced by M:
/// argmin_{l <= z <= u} 1/2 |z - y|_M^2.
///
/// Coordinates with l_i = u_i are fixed and eliminated before solving.
inline ProjectionResult project(const LowRankPlusShift &metric, const Vector &y,
                                const BoxBounds &bounds, const IpmConfig &cfg,
                                const IpmState *warm = nullptr) {
  const Index n = metric.dim();
  if (y.size() != n || bounds.size() != n)
    throw std::invalid_argument("project: dimension mismatch");

  std::vector<Index> free_idx;
  for (Index i = 0; i < n; ++i)
    if (!bounds.is_fixed(i))
      free_idx.push_back(i);

  if (static_cast<Index>(free_idx.size()) == n) {
    WoodburySolver solver(metric);
    return solve_box_qp(solver, metric.apply(y), y, bounds, cfg, warm);
  }

  // z_F = l_F; the free block sees q_R = (M (y - t))_R with t = [0; z_F].
  Vector t = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (bounds.is_fixed(i))
      t[i] = bounds.lower(i);
  const Vector q_full = metric.apply(y - t);

  ProjectionResult res;
  res.z = t;
  if (free_idx.empty()) {
    res.report.converged = true;
    return res;
  }

  const Index nr = static_cast<Index>(free_idx.size());
  Vector q(nr), y_r(nr);
  for (Index k = 0; k < nr; ++k) {
    q[k] = q_full[free_idx[k]];
    y_r[k] = y[free_idx[k]];
  }
  WoodburySolver solver(metric.rows(free_idx));
  ProjectionResult sub =
      solve_box_qp(solver, q, y_r, bounds.subset(free_idx), cfg, warm);
  for (Index k = 0; k < nr; ++k)
    res.z[free_idx[k]] = sub.z[k];
  res.report = sub.report;
  res.state = std::move(sub.state);
  return res;
}

inline ProjectionResult project(const ShiftedMetric &metric, const Vector &y,
                                const BoxBounds &bounds, const IpmConfig &cfg,
                                const IpmState *warm = nullptr) {
  return project(LowRankPlusShift::from(metric), y, bounds, cfg, warm);
}

} // namespace pnkhb

#endif // PNKHB_PROJECTION_IPM_HPP
