//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include "pnkhb/bounds.hpp"
#include "pnkhb/operators.hpp"
#include "pnkhb/problems/quadratic.hpp"
#include "support.hpp"

namespace {

using namespace pnkhb;
using pnkhb::testing::randn;
using pnkhb::testing::Rng;

TEST(BoxBounds, RejectsInvalid) {
  EXPECT_THROW(BoxBounds(Vector::Zero(2), Vector::Zero(3)),
               std::invalid_argument);
  EXPECT_THROW(BoxBounds(Vector::Ones(2), Vector::Zero(2)),
               std::invalid_argument);
  Vector nan_lo = Vector::Zero(1);
  nan_lo[0] = std::nan("");
  EXPECT_THROW(BoxBounds(nan_lo, Vector::Ones(1)), std::invalid_argument);
}

TEST(BoxBounds, ClampAndContains) {
  BoxBounds b(Eigen::Vector3d(-1, -kInf, 0), Eigen::Vector3d(1, 2, kInf));
  const Vector z = b.clamp(Eigen::Vector3d(-3, -1e300, 5));
  EXPECT_EQ(z, Eigen::Vector3d(-1, -1e300, 5));
  EXPECT_TRUE(b.contains(z));
  EXPECT_FALSE(b.contains(Eigen::Vector3d(0, 3, 0)));
  EXPECT_TRUE(b.has_upper(0));
  EXPECT_FALSE(b.has_lower(1));
  EXPECT_FALSE(b.has_upper(2));
}

TEST(BoxBounds, SubsetKeepsOrder) {
  BoxBounds b(Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(3, 4, 5));
  const BoxBounds s = b.subset(std::vector<Index> { 2, 0 });
  EXPECT_EQ(s.lower(), Eigen::Vector2d(2, 0));
  EXPECT_EQ(s.upper(), Eigen::Vector2d(5, 3));
}

TEST(DenseOperator, Fig1Product) {
  Matrix h(2, 2);
  h << 1, 1, 1, 2;
  EXPECT_EQ(dense_operator(h).apply(Eigen::Vector2d(1, 0)),
            Eigen::Vector2d(1, 1));
}

TEST(DenseOperator, Identity) {
  const Vector v = Eigen::Vector3d(3, -1, 2);
  EXPECT_EQ(dense_operator(Matrix::Identity(3, 3)).apply(v), v);
}

TEST(DenseOperator, MatchesDirectProduct) {
  Rng rng(1);
  Matrix m = randn(5, 5, rng);
  m = (m + m.transpose()).eval();
  const Vector v = randn(5, rng);
  EXPECT_LE((dense_operator(m).apply(v) - m * v).norm(), 1e-14 * (m * v).norm());
}

TEST(DenseOperator, RejectsAsymmetric) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 1e-6;
  EXPECT_THROW(dense_operator(m), std::invalid_argument);
  EXPECT_THROW(dense_operator(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(HessianOperator, DimensionChecked) {
  const HessianOperator op = dense_operator(Matrix::Identity(3, 3));
  EXPECT_THROW(op.apply(Vector::Zero(2)), std::invalid_argument);
}

TEST(HessianOperator, Deterministic) {
  Rng rng(2);
  Matrix m = randn(6, 6, rng);
  m = (m * m.transpose()).eval();
  const HessianOperator op = dense_operator(m);
  const Vector v = randn(6, rng);
  EXPECT_EQ(op.apply(v), op.apply(v));
}

TEST(GaussNewtonOperator, IdentityJacobian) {
  auto id = [](const Vector &v) { return v; };
  const HessianOperator op = gauss_newton_operator(3, 3, id, id, nullptr, 0);
  const Vector v = Eigen::Vector3d(1, -2, 4);
  EXPECT_EQ(op.apply(v), v);
}

TEST(GaussNewtonOperator, DiagonalJacobianWithRegularizer) {
  Matrix j(2, 2);
  j << 2, 0, 0, 3;
  auto ja = [j](const Vector &v) { return Vector(j * v); };
  auto jt = [j](const Vector &r) { return Vector(j.transpose() * r); };
  auto reg = [](const Vector &v) { return v; };
  const HessianOperator op = gauss_newton_operator(2, 2, ja, jt, reg, 1.0);
  EXPECT_LE((op.apply(Eigen::Vector2d(1, 1)) - Eigen::Vector2d(5, 10)).norm(),
            1e-14);
}

TEST(GaussNewtonOperator, AdjointConsistentAndPsd) {
  Rng rng(3);
  const Matrix j = randn(7, 4, rng);
  const Matrix l = randn(3, 4, rng);
  auto ja = [j](const Vector &v) { return Vector(j * v); };
  auto jt = [j](const Vector &r) { return Vector(j.transpose() * r); };
  auto reg = [l](const Vector &v) { return Vector(l.transpose() * (l * v)); };
  const HessianOperator op = gauss_newton_operator(4, 7, ja, jt, reg, 0.5);
  for (int k = 0; k < 10; ++k) {
    const Vector u = randn(4, rng), w = randn(7, rng);
    EXPECT_NEAR(ja(u).dot(w), u.dot(jt(w)), 1e-10 * (1 + u.norm() * w.norm()));
    const Vector v = randn(4, rng);
    EXPECT_GE(v.dot(op.apply(v)), -1e-10 * v.squaredNorm());
  }
  EXPECT_LE(symmetry_defect(op), 1e-10);
}

TEST(GaussNewtonOperator, RejectsMismatch) {
  auto bad = [](const Vector &v) { return Vector(v.head(1)); };
  auto id = [](const Vector &v) { return v; };
  const HessianOperator op = gauss_newton_operator(2, 2, bad, id, nullptr, 0);
  EXPECT_THROW(op.apply(Vector::Ones(2)), std::invalid_argument);
  EXPECT_THROW(gauss_newton_operator(2, 2, id, id, nullptr, -1),
               std::invalid_argument);
  EXPECT_THROW(gauss_newton_operator(2, 2, id, id, nullptr, 1),
               std::invalid_argument);
}

TEST(KroneckerOperator, MatchesExplicitProduct) {
  Rng rng(4);
  Matrix a = randn(3, 3, rng), b = randn(4, 4, rng);
  a = (a + a.transpose()).eval();
  b = (b + b.transpose()).eval();
  Matrix kron(12, 12);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      kron.block(4 * i, 4 * j, 4, 4) = a(i, j) * b;
  const Vector v = randn(12, rng);
  EXPECT_LE((kronecker_operator(a, b).apply(v) - kron * v).norm(), 1e-12);
  EXPECT_LE(symmetry_defect(kronecker_operator(a, b)), 1e-12);
}

TEST(SymmetryDefect, DetectsAsymmetry) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 2) = 1;
  const HessianOperator op(3, [m](const Vector &v) { return Vector(m * v); });
  EXPECT_GT(symmetry_defect(op), 1e-3);
}

TEST(CheckGradient, QuadraticIsExact) {
  Rng rng(5);
  QuadraticBoxProblem q = pnkhb::testing::random_box_qp(6, 10, rng);
  EXPECT_LE(check_gradient(q.objective(), randn(6, rng)), 1e-7);
}

TEST(CheckGradient, FlagsScaledGradient) {
  QuadraticBoxProblem q = make_fig1_problem();
  ObjectiveProblem p = q.objective();
  auto good = p.gradient;
  p.gradient = [good](const Vector &x) { return Vector(2 * good(x)); };
  EXPECT_NEAR(check_gradient(p, q.x0), 0.5, 1e-6);
}

} // namespace
