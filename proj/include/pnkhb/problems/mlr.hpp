//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_PROBLEMS_MLR_HPP
#define PNKHB_PROBLEMS_MLR_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/operators.hpp"

namespace pnkhb {

/// Multinomial logistic regression on random tanh features.
///
/// The unknown is the n_classes x m_f weight matrix X, flattened column-major.
/// f(X) = -(1/N) sum_j log softmax(X d_j)[label_j].
struct MlrProblem {
  Index n_classes = 0;
  Matrix projection;          // K, m_f x n_f
  Matrix features;            // D, m_f x N, columns d_j = tanh(K b_j)
  std::vector<Index> labels;  // class of each sample
  BoxBounds bounds;

  Index n_features() const { return features.rows(); }
  Index n_samples() const { return features.cols(); }
  Index dim() const { return n_classes * n_features(); }

  Eigen::Map<const Matrix> weights(const Vector &x) const {
    return { x.data(), n_classes, n_features() };
  }

  /// Columns h_X(d_j) of class probabilities; each lies on the unit simplex.
  Matrix hypothesis(const Vector &x) const {
    Matrix s = weights(x) * features;
    for (Index j = 0; j < s.cols(); ++j) {
      const double mx = s.col(j).maxCoeff();
      s.col(j) = (s.col(j).array() - mx).exp();
      s.col(j) /= s.col(j).sum();
    }
    return s;
  }

  double value(const Vector &x) const {
    const Matrix s = weights(x) * features;
    double total = 0;
    for (Index j = 0; j < s.cols(); ++j) {
      const double mx = s.col(j).maxCoeff();
      const double lse = mx + std::log((s.col(j).array() - mx).exp().sum());
      total += lse - s(labels[j], j);
    }
    return total / static_cast<double>(n_samples());
  }

  Vector gradient(const Vector &x) const {
    Matrix r = hypothesis(x);
    for (Index j = 0; j < r.cols(); ++j)
      r(labels[j], j) -= 1.0;
    Matrix g = r * features.transpose() / static_cast<double>(n_samples());
    return Eigen::Map<const Vector>(g.data(), g.size());
  }

  /// Exact Hessian of the cross-entropy at x (convex, PSD).
  HessianOperator hessian_at(const Vector &x) const {
    return hessian_at(std::make_shared<const MlrProblem>(*this), x);
  }

  static HessianOperator hessian_at(std::shared_ptr<const MlrProblem> self,
                                    const Vector &x) {
    auto probs = std::make_shared<const Matrix>(self->hypothesis(x));
    return { self->dim(), [probs, self](const Vector &v) -> Vector {
              const Matrix sv = self->weights(v) * self->features;
              Matrix t = probs->cwiseProduct(sv);
              const Eigen::RowVectorXd mean = t.colwise().sum();
              t -= probs->cwiseProduct(
                  Matrix::Ones(probs->rows(), 1) * mean);
              Matrix h = t * self->features.transpose()
                         / static_cast<double>(self->n_samples());
              return Eigen::Map<const Vector>(h.data(), h.size());
            } };
  }

  ObjectiveProblem objective() const {
    auto self = std::make_shared<const MlrProblem>(*this);
    ObjectiveProblem p;
    p.n = dim();
    p.value = [self](const Vector &x) { return self->value(x); };
    p.gradient = [self](const Vector &x) { return self->gradient(x); };
    p.hessian_at = [self](const Vector &x) { return hessian_at(self, x); };
    p.bounds = bounds;
    return p;
  }
};

struct MlrOptions {
  Index n_classes = 5;
  Index n_f = 20;
  Index m_f = 100;
  Index n_samples = 2000;
  std::uint64_t seed = 42;
  double bound = 0.05;
  double class_separation = 1.0;
  double input_scale = 0.05;
};

/// Synthetic data: inputs drawn from class-dependent Gaussian blobs, lifted
/// by d = tanh(K b) with K standard normal.
inline MlrProblem make_synthetic_mlr(const MlrOptions &opt) {
  if (opt.n_classes < 2 || opt.n_f < 1 || opt.m_f <= opt.n_f
      || opt.n_samples < opt.n_classes)
    throw std::invalid_argument(
        "make_synthetic_mlr: need n_classes >= 2, m_f > n_f >= 1 and "
        "N >= n_classes");
  if (!(opt.bound > 0))
    throw std::invalid_argument("make_synthetic_mlr: bound must be positive");
  if (!(opt.input_scale > 0))
    throw std::invalid_argument(
        "make_synthetic_mlr: input_scale must be positive");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  auto randn = [&](Index r, Index c) {
    return Matrix(Matrix::NullaryExpr(r, c, [&](Index, Index) {
      return normal(rng);
    }));
  };

  const Matrix means = opt.class_separation * randn(opt.n_f, opt.n_classes);
  MlrProblem p;
  p.n_classes = opt.n_classes;
  p.projection = randn(opt.m_f, opt.n_f);
  p.labels.resize(static_cast<std::size_t>(opt.n_samples));
  Matrix inputs(opt.n_f, opt.n_samples);
  for (Index j = 0; j < opt.n_samples; ++j) {
    const Index c = j % opt.n_classes;
    p.labels[static_cast<std::size_t>(j)] = c;
    inputs.col(j) = opt.input_scale * (means.col(c) + randn(opt.n_f, 1));
  }
  p.features = (p.projection * inputs).array().tanh();
  const Index n = opt.n_classes * opt.m_f;
  p.bounds = BoxBounds::uniform(n, -opt.bound, opt.bound);
  return p;
}

} // namespace pnkhb

#endif // PNKHB_PROBLEMS_MLR_HPP
