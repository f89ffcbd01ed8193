//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_ACTIVE_SET_HPP
#define PNKHB_ACTIVE_SET_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/lanczos.hpp"
#include "pnkhb/operators.hpp"
#include "pnkhb/projection_ipm.hpp"

namespace pnkhb {

enum class ActiveSetMode { none, boundary, augmented };

inline std::string_view to_string(ActiveSetMode mode) {
  switch (mode) {
  case ActiveSetMode::none:
    return "none";
  case ActiveSetMode::boundary:
    return "boundary";
  case ActiveSetMode::augmented:
    return "augmented";
  }
  return "?";
}

/// Split of {0..n-1} into estimated active and inactive coordinates, both
/// sorted.
struct Partition {
  std::vector<Index> active;
  std::vector<Index> inactive;
  double epsilon = 0;

  Index size() const {
    return static_cast<Index>(active.size() + inactive.size());
  }

  double active_fraction() const {
    return size() == 0 ? 0.0
                       : static_cast<double>(active.size())
                             / static_cast<double>(size());
  }

  static Partition all_inactive(Index n) {
    Partition p;
    p.inactive.resize(n);
    for (Index i = 0; i < n; ++i)
      p.inactive[i] = i;
    return p;
  }

  template <class Pred>
  static Partition from_predicate(Index n, double eps, Pred &&is_active) {
    Partition p;
    p.epsilon = eps;
    for (Index i = 0; i < n; ++i)
      (is_active(i) ? p.active : p.inactive).push_back(i);
    return p;
  }
};

/// 1e-3 times the narrowest finite, nondegenerate coordinate range, with an
/// absolute floor of 1e-8. Falls back to 1e-3 when no coordinate has two
/// finite bounds.
inline double default_epsilon(const BoxBounds &bounds) {
  double width = kInf;
  for (Index i = 0; i < bounds.size(); ++i) {
    const double w = bounds.upper(i) - bounds.lower(i);
    if (std::isfinite(w) && w > 0)
      width = std::min(width, w);
  }
  if (!std::isfinite(width))
    return 1e-3;
  return std::max(1e-3 * width, 1e-8);
}

inline Partition boundary_index(const Vector &x, const BoxBounds &bounds,
                                double eps) {
  if (x.size() != bounds.size())
    throw std::invalid_argument("boundary_index: dimension mismatch");
  return Partition::from_predicate(x.size(), eps, [&](Index i) {
    return x[i] <= bounds.lower(i) + eps || x[i] >= bounds.upper(i) - eps;
  });
}

inline Partition augmented_index(const Vector &x, const Vector &grad,
                                 const BoxBounds &bounds, double eps) {
  if (x.size() != bounds.size() || grad.size() != bounds.size())
    throw std::invalid_argument("augmented_index: dimension mismatch");
  return Partition::from_predicate(x.size(), eps, [&](Index i) {
    return (x[i] <= bounds.lower(i) + eps && grad[i] > 0)
           || (x[i] >= bounds.upper(i) - eps && grad[i] < 0);
  });
}

inline Partition select_partition(ActiveSetMode mode, const Vector &x,
                                  const Vector &grad, const BoxBounds &bounds,
                                  double eps) {
  switch (mode) {
  case ActiveSetMode::boundary:
    return boundary_index(x, bounds, eps);
  case ActiveSetMode::augmented:
    return augmented_index(x, grad, bounds, eps);
  case ActiveSetMode::none:
    break;
  }
  Partition p = Partition::all_inactive(x.size());
  p.epsilon = eps;
  return p;
}

namespace internal {
  inline Vector gather(const Vector &v, const std::vector<Index> &idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
      out[static_cast<Index>(k)] = v[idx[k]];
    return out;
  }

  inline void scatter(const Vector &src, const std::vector<Index> &idx,
                      Vector &dst) {
    for (std::size_t k = 0; k < idx.size(); ++k)
      dst[idx[k]] = src[static_cast<Index>(k)];
  }
} // namespace internal

/// Block-diagonal metric: shifted Krylov metric F~ on the inactive block,
/// nu * I on the active block.
struct PartitionedMetric {
  Partition partition;
  ShiftedMetric inactive;
  double nu = 1.0;

  Index dim() const { return partition.size(); }

  Vector apply(const Vector &v) const {
    Vector out(v.size());
    for (Index i: partition.active)
      out[i] = nu * v[i];
    if (!partition.inactive.empty())
      internal::scatter(
          apply_metric(inactive, internal::gather(v, partition.inactive)),
          partition.inactive, out);
    return out;
  }
};

struct PartitionedDirection {
  Vector step; // H^{-1} grad; the trial point is x - mu * step
  Vector inactive_step;
  PartitionedMetric metric;
};

/// Builds the partitioned Newton-Krylov step and its metric. Lanczos runs on
/// v -> P G P^T v (by index masking) seeded with -P grad.
inline PartitionedDirection
partitioned_direction(const HessianOperator &hessian, const Vector &grad,
                      const Partition &partition, Index max_rank, double c,
                      LanczosOptions lanczos = {}) {
  const Index n = grad.size();
  if (hessian.dim() != n || partition.size() != n)
    throw std::invalid_argument("partitioned_direction: dimension mismatch");

  PartitionedDirection dir;
  dir.metric.partition = partition;
  dir.metric.inactive.c = c;
  dir.step = Vector::Zero(n);

  const auto &inactive = partition.inactive;
  const Index ni = static_cast<Index>(inactive.size());
  const Vector g_inactive = internal::gather(grad, inactive);

  if (ni > 0 && g_inactive.norm() > 0) {
    HessianOperator reduced =
        ni == n ? hessian
                : HessianOperator(ni, [&hessian, &inactive, n](const Vector &v) {
                    Vector full = Vector::Zero(n);
                    internal::scatter(v, inactive, full);
                    return internal::gather(hessian.apply(full), inactive);
                  });
    lanczos.curvature_floor = c;
    dir.metric.inactive.fact = lanczos_tridiag(
        reduced, -g_inactive, std::min<Index>(max_rank, ni), lanczos);
    dir.inactive_step = apply_pseudoinverse(dir.metric.inactive.fact, g_inactive);
  } else {
    dir.metric.inactive.fact = KrylovFactorization::empty(ni);
    dir.inactive_step = Vector::Zero(ni);
  }
  internal::scatter(dir.inactive_step, inactive, dir.step);

  double nu = 1.0;
  if (!partition.active.empty()) {
    double num = 0;
    for (Index i: partition.active)
      num = std::max(num, std::abs(grad[i]));
    const double den =
        ni > 0 ? dir.inactive_step.lpNorm<Eigen::Infinity>() : 0.0;
    if (num > 0 && den > 0 && std::isfinite(num / den))
      nu = num / den;
    for (Index i: partition.active)
      dir.step[i] = grad[i] / nu;
  }
  dir.metric.nu = nu;
  return dir;
}

inline PartitionedDirection
partitioned_direction(const ObjectiveProblem &problem, const Vector &x,
                      const Partition &partition, Index max_rank, double c) {
  return partitioned_direction(problem.hessian_at(x), problem.gradient(x),
                               partition, max_rank, c);
}

/// Projection under the block-diagonal metric: Euclidean clamp on the active
/// coordinates, interior point projection on the inactive ones.
inline ProjectionResult partitioned_project(const PartitionedMetric &pmetric,
                                            const Vector &y,
                                            const BoxBounds &bounds,
                                            const IpmConfig &cfg,
                                            const IpmState *warm = nullptr) {
  if (y.size() != bounds.size() || pmetric.dim() != y.size())
    throw std::invalid_argument("partitioned_project: dimension mismatch");
  const auto &part = pmetric.partition;
  ProjectionResult res;
  res.z = y;
  for (Index i: part.active)
    res.z[i] = std::max(std::min(y[i], bounds.upper(i)), bounds.lower(i));
  res.report.converged = true;
  if (part.inactive.empty())
    return res;

  ProjectionResult sub =
      project(pmetric.inactive, internal::gather(y, part.inactive),
              bounds.subset(part.inactive), cfg, warm);
  internal::scatter(sub.z, part.inactive, res.z);
  res.report = sub.report;
  res.state = std::move(sub.state);
  return res;
}

} // namespace pnkhb

#endif // PNKHB_ACTIVE_SET_HPP
