//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_PROBLEMS_QUADRATIC_HPP
#define PNKHB_PROBLEMS_QUADRATIC_HPP

#include <memory>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/operators.hpp"

namespace pnkhb {

/// f(x) = 1/2 x'Hx + b'x over a box, with constant Hessian H.
struct QuadraticBoxProblem {
  Matrix hessian;
  Vector b;
  BoxBounds bounds;
  Vector x0;

  Index dim() const { return b.size(); }

  double value(const Vector &x) const {
    return 0.5 * x.dot(hessian * x) + b.dot(x);
  }
  Vector gradient(const Vector &x) const { return hessian * x + b; }

  ObjectiveProblem objective() const {
    if (hessian.rows() != b.size() || hessian.cols() != b.size()
        || bounds.size() != b.size())
      throw std::invalid_argument("QuadraticBoxProblem: dimension mismatch");
    auto self = std::make_shared<const QuadraticBoxProblem>(*this);
    HessianOperator op = dense_operator(hessian);
    ObjectiveProblem p;
    p.n = b.size();
    p.value = [self](const Vector &x) { return self->value(x); };
    p.gradient = [self](const Vector &x) { return self->gradient(x); };
    p.hessian_at = [op](const Vector &) { return op; };
    p.bounds = bounds;
    return p;
  }
};

/// Two-dimensional example: H = [1 1; 1 2], b = [1; 1], l = [-5; 3],
/// u = [0; 8], x0 = [-3; 7]. The constrained optimum is [-4; 3] and the
/// unconstrained one is [-1; 0].
inline QuadraticBoxProblem make_fig1_problem() {
  QuadraticBoxProblem q;
  q.hessian.resize(2, 2);
  q.hessian << 1, 1, 1, 2;
  q.b = Vector::Ones(2);
  q.bounds = BoxBounds(Eigen::Vector2d(-5, 3), Eigen::Vector2d(0, 8));
  q.x0 = Eigen::Vector2d(-3, 7);
  return q;
}

} // namespace pnkhb

#endif // PNKHB_PROBLEMS_QUADRATIC_HPP
