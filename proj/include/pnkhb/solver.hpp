//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_SOLVER_HPP
#define PNKHB_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/active_set.hpp"
#include "pnkhb/bounds.hpp"
#include "pnkhb/lanczos.hpp"
#include "pnkhb/operators.hpp"
#include "pnkhb/projection_ipm.hpp"

namespace pnkhb {

enum class Method { pnkhb, projected_gradient, pncg };

inline std::string_view to_string(Method m) {
  switch (m) {
  case Method::pnkhb:
    return "pnkhb";
  case Method::projected_gradient:
    return "projected_gradient";
  case Method::pncg:
    return "pncg";
  }
  return "?";
}

enum class SolverStatus {
  converged_xtol,
  converged_gtol,
  max_iterations,
  linesearch_failure,
};

inline std::string_view to_string(SolverStatus s) {
  switch (s) {
  case SolverStatus::converged_xtol:
    return "converged_xtol";
  case SolverStatus::converged_gtol:
    return "converged_gtol";
  case SolverStatus::max_iterations:
    return "max_iterations";
  case SolverStatus::linesearch_failure:
    return "linesearch_failure";
  }
  return "?";
}

inline bool is_converged(SolverStatus s) {
  return s == SolverStatus::converged_xtol || s == SolverStatus::converged_gtol;
}

struct SolverConfig {
  int max_outer = 20;
  int max_linesearch = 10;
  double alpha = 1e-4; // Armijo parameter
  double xtol = 1e-8;
  double gtol = 1e-6;
  Index max_rank = 20;
  double shift = kDefaultShift;
  ActiveSetMode active_set = ActiveSetMode::none;
  std::optional<double> epsilon; // default_epsilon(bounds) when unset
  IpmConfig ipm;
  double breakdown_tol = 1e-12;
  /// Literal reading of the outer loop: restart every line search at mu = 1.
  bool strict_mu_reset = false;
  /// On line-search exhaustion, try a projected-gradient step before giving
  /// up.
  bool gradient_fallback = false;

  void validate() const {
    if (max_outer < 1 || max_linesearch < 1)
      throw std::invalid_argument("SolverConfig: iteration limits must be >= 1");
    if (!(alpha > 0 && alpha < 1))
      throw std::invalid_argument("SolverConfig: alpha must lie in (0, 1)");
    if (!(xtol > 0) || !(gtol > 0))
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (max_rank < 1)
      throw std::invalid_argument("SolverConfig: max_rank must be >= 1");
    if (!(shift > 0))
      throw std::invalid_argument("SolverConfig: shift must be positive");
    if (epsilon && !(*epsilon >= 0))
      throw std::invalid_argument("SolverConfig: epsilon must be >= 0");
    ipm.validate();
  }
};

struct IterationRecord {
  int k = 0;
  double f = 0;
  double proj_grad_norm = 0;
  double step_size = 0;
  int ls_trials = 0;
  int n_projections = 0;
  int ipm_iters_total = 0;
  double ipm_iters_avg = 0;
  bool ipm_converged = true;
  double active_fraction = 0;
  Index lanczos_rank = 0;
  std::int64_t operator_applies = 0; // cumulative
  double elapsed_seconds = 0;
};

struct ConvergenceHistory {
  double f_initial = 0;
  double proj_grad_norm_initial = 0;
  std::vector<IterationRecord> records;

  std::size_t iterations() const { return records.size(); }
};

struct SolverResult {
  Vector x;
  SolverStatus status = SolverStatus::max_iterations;
  ConvergenceHistory history;
  double f = 0;
  double proj_grad_norm = 0;
  std::int64_t operator_applies = 0;
};

/// Everything an observer needs to audit one accepted iteration.
struct IterationView {
  Method method;
  int k;
  const Vector &x_prev;
  const Vector &x_next;
  const Vector &grad_prev;
  double f_prev;
  double f_next;
  double mu;
  double alpha;
  double ipm_tol;
  /// Metric of the projection; null for the projected-gradient baseline,
  /// whose metric is the identity.
  const PartitionedMetric *metric;
  /// Whether the projection used that metric (false for the two-metric
  /// baseline, which clamps).
  bool one_metric;
};

using IterationObserver = std::function<void(const IterationView &)>;

/// |x - clamp(x - grad)|_2; zero exactly at stationary points of the box
/// constrained problem.
inline double projected_gradient_norm(const Vector &x, const Vector &grad,
                                      const BoxBounds &bounds) {
  return (x - bounds.clamp(x - grad)).norm();
}

inline double projected_gradient_norm(const ObjectiveProblem &problem,
                                      const Vector &x) {
  return projected_gradient_norm(x, problem.gradient(x), problem.bounds);
}

namespace internal {
  /// Problem view that counts oracle calls: objective values, gradients and
  /// Hessian-vector products each cost one apply.
  struct CountingOracle {
    const ObjectiveProblem &problem;
    std::shared_ptr<std::int64_t> applies = std::make_shared<std::int64_t>(0);

    double value(const Vector &x) const {
      ++*applies;
      return problem.value(x);
    }
    Vector gradient(const Vector &x) const {
      ++*applies;
      return problem.gradient(x);
    }
    HessianOperator hessian_at(const Vector &x) const {
      HessianOperator h = problem.hessian_at(x);
      auto counter = applies;
      return { h.dim(), [h, counter](const Vector &v) {
                ++*counter;
                return h.apply(v);
              } };
    }
  };

  struct Trial {
    Vector x;
    double f = 0;
    double mu = 0;
    int trials = 0;
    int ipm_iters = 0;
    bool ipm_converged = true;
    bool accepted = false;
  };

  template <class ProjectFn>
  Trial armijo_search(const CountingOracle &oracle, const Vector &x, double f,
                      const Vector &grad, const Vector &step, double mu,
                      const SolverConfig &cfg, ProjectFn &&project_fn) {
    Trial t;
    for (int i = 0; i < cfg.max_linesearch; ++i) {
      ++t.trials;
      ProjectionResult pr = project_fn(Vector(x - mu * step));
      t.ipm_iters += pr.report.iterations;
      t.ipm_converged = t.ipm_converged && pr.report.converged;
      const double ft = oracle.value(pr.z);
      if (ft < f + cfg.alpha * grad.dot(pr.z - x)) {
        t.x = std::move(pr.z);
        t.f = ft;
        t.mu = mu;
        t.accepted = true;
        return t;
      }
      mu /= 2;
    }
    t.mu = mu;
    return t;
  }

  inline SolverResult run_solver(Method method, const ObjectiveProblem &problem,
                                 const Vector &x0, const SolverConfig &cfg,
                                 const IterationObserver &observer) {
    cfg.validate();
    const BoxBounds &bounds = problem.bounds;
    if (x0.size() != problem.n || bounds.size() != problem.n)
      throw std::invalid_argument("solver: dimension mismatch");
    if (!bounds.contains(x0))
      throw std::invalid_argument("solver: x0 is not feasible");

    const auto start = std::chrono::steady_clock::now();
    CountingOracle oracle { problem };
    const double eps = cfg.epsilon.value_or(default_epsilon(bounds));
    const ActiveSetMode mode = cfg.active_set;

    SolverResult res;
    Vector x = x0;
    double f = oracle.value(x);
    Vector g = oracle.gradient(x);
    double pg = projected_gradient_norm(x, g, bounds);
    res.history.f_initial = f;
    res.history.proj_grad_norm_initial = pg;
    res.status = SolverStatus::max_iterations;

    if (pg < cfg.gtol) {
      res.status = SolverStatus::converged_gtol;
    } else {
      double mu = 1.0;
      double prev_mu = std::numeric_limits<double>::quiet_NaN();

      for (int k = 0; k < cfg.max_outer; ++k) {
        if (cfg.strict_mu_reset)
          mu = 1.0;

        std::optional<PartitionedDirection> dir;
        Vector step;
        if (method == Method::projected_gradient) {
          step = g;
        } else {
          Partition part = select_partition(mode, x, g, bounds, eps);
          LanczosOptions lo;
          lo.breakdown_tol = cfg.breakdown_tol;
          dir = partitioned_direction(oracle.hessian_at(x), g, part,
                                      cfg.max_rank, cfg.shift, lo);
          step = dir->step;
        }

        IpmState warm;
        bool have_warm = false;
        auto project_fn = [&](const Vector &y) -> ProjectionResult {
          if (method != Method::pnkhb) {
            ProjectionResult pr;
            pr.z = bounds.clamp(y);
            pr.report.converged = true;
            return pr;
          }
          ProjectionResult pr = partitioned_project(
              dir->metric, y, bounds, cfg.ipm,
              cfg.ipm.warm_start && have_warm ? &warm : nullptr);
          if (cfg.ipm.warm_start && pr.state.z.size() > 0) {
            warm = pr.state;
            have_warm = true;
          }
          return pr;
        };

        Trial t = armijo_search(oracle, x, f, g, step, mu, cfg, project_fn);
        int trials = t.trials;
        int ipm_iters = t.ipm_iters;
        bool ipm_ok = t.ipm_converged;
        bool fallback = false;
        if (!t.accepted && cfg.gradient_fallback
            && method != Method::projected_gradient) {
          Trial pgt = armijo_search(
              oracle, x, f, g, g, 1.0, cfg, [&](const Vector &y) {
                ProjectionResult pr;
                pr.z = bounds.clamp(y);
                pr.report.converged = true;
                return pr;
              });
          trials += pgt.trials;
          if (pgt.accepted) {
            t = std::move(pgt);
            fallback = true;
          }
        }
        if (!t.accepted) {
          res.status = SolverStatus::linesearch_failure;
          break;
        }

        Vector g_next = oracle.gradient(t.x);
        if (observer) {
          const bool one_metric = method == Method::pnkhb && !fallback;
          observer(IterationView { method, k, x, t.x, g, f, t.f, t.mu,
                                   cfg.alpha, cfg.ipm.tol,
                                   dir && !fallback ? &dir->metric : nullptr,
                                   one_metric });
        }

        const double step_norm = (t.x - x).norm();
        const double x_norm = x.norm();
        x = std::move(t.x);
        f = t.f;
        g = std::move(g_next);
        pg = projected_gradient_norm(x, g, bounds);

        IterationRecord rec;
        rec.k = k;
        rec.f = f;
        rec.proj_grad_norm = pg;
        rec.step_size = t.mu;
        rec.ls_trials = trials;
        rec.n_projections = trials;
        rec.ipm_iters_total = ipm_iters;
        rec.ipm_iters_avg =
            trials > 0 ? static_cast<double>(ipm_iters) / trials : 0.0;
        rec.ipm_converged = ipm_ok;
        rec.active_fraction = dir ? dir->metric.partition.active_fraction() : 0;
        rec.lanczos_rank = dir ? dir->metric.inactive.rank() : 0;
        rec.operator_applies = *oracle.applies;
        rec.elapsed_seconds = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
        res.history.records.push_back(rec);

        if (step_norm < cfg.xtol * x_norm) {
          res.status = SolverStatus::converged_xtol;
          break;
        }
        if (pg < cfg.gtol) {
          res.status = SolverStatus::converged_gtol;
          break;
        }

        const double accepted = t.mu;
        mu = accepted == prev_mu ? std::min(1.5 * accepted, 1.0) : accepted;
        prev_mu = accepted;
      }
    }

    res.x = std::move(x);
    res.f = f;
    res.proj_grad_norm = pg;
    res.operator_applies = *oracle.applies;
    return res;
  }
} // namespace internal

/// Projected Newton-Krylov method with a low-rank Hessian metric.
///
/// Each iteration builds a Lanczos factorization of the (projected) Hessian
/// seeded with the (projected) negative gradient, steps along -H^{-1} grad
/// and projects every line-search trial onto the box in the shifted Krylov
/// metric. cfg.active_set selects the unpartitioned method or one of the two
/// partitioned variants.
inline SolverResult solve_pnkhb(const ObjectiveProblem &problem,
                                const Vector &x0, const SolverConfig &cfg,
                                const IterationObserver &observer = {}) {
  return internal::run_solver(Method::pnkhb, problem, x0, cfg, observer);
}

/// Projected gradient with Armijo backtracking on the projected arc.
inline SolverResult solve_projected_gradient(
    const ObjectiveProblem &problem, const Vector &x0, const SolverConfig &cfg,
    const IterationObserver &observer = {}) {
  return internal::run_solver(Method::projected_gradient, problem, x0, cfg,
                              observer);
}

/// Two-metric projected Newton-CG baseline: same (optionally partitioned)
/// Newton-Krylov direction as solve_pnkhb, but every trial is clamped in the
/// Euclidean metric.
inline SolverResult solve_pncg_two_metric(
    const ObjectiveProblem &problem, const Vector &x0, const SolverConfig &cfg,
    const IterationObserver &observer = {}) {
  return internal::run_solver(Method::pncg, problem, x0, cfg, observer);
}

inline SolverResult solve(Method method, const ObjectiveProblem &problem,
                          const Vector &x0, const SolverConfig &cfg,
                          const IterationObserver &observer = {}) {
  return internal::run_solver(method, problem, x0, cfg, observer);
}

} // namespace pnkhb

#endif // PNKHB_SOLVER_HPP
