//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_PROBLEMS_SPECTRAL_CT_HPP
#define PNKHB_PROBLEMS_SPECTRAL_CT_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "pnkhb/bounds.hpp"
#include "pnkhb/operators.hpp"

namespace pnkhb {

/// Energy-windowed spectral CT as nonlinear least squares:
///
///   y(w) = (S^T kron I) exp(-(C kron A) w)
///   f(w) = 1/2 |y(w) - y_obs|^2 + g1/2 |D w_1|^2 + g2 sum(w_2..w_Nm)
///
/// w stacks the N_v pixel weights of each material (material-major). The
/// Kronecker products are applied as matrix products on reshaped blocks:
/// (C kron A) vec(W) = vec(A W C^T) and (S^T kron I) vec(E) = vec(E S).
struct SpectralCtProblem {
  Matrix spectra;     // S, N_e x N_b
  Matrix attenuation; // C, N_e x N_m
  Matrix rays;        // A, (N_d N_p) x N_v
  Matrix gradient_op; // D, discrete gradient on the N_v pixels of material 1
  Vector data;        // observed y, length N_d N_p N_b
  Vector truth;       // ground-truth weights used to synthesize data
  double gamma1 = 0;
  double gamma2 = 0;
  BoxBounds bounds;

  static constexpr double kMaxExponent = 500;

  Index n_pixels() const { return rays.cols(); }
  Index n_materials() const { return attenuation.cols(); }
  Index n_rays() const { return rays.rows(); }
  Index n_bins() const { return spectra.cols(); }
  Index dim() const { return n_pixels() * n_materials(); }
  Index n_data() const { return n_rays() * n_bins(); }

  Eigen::Map<const Matrix> blocks(const Vector &w) const {
    return { w.data(), n_pixels(), n_materials() };
  }

  /// exp(-A W C^T), (N_d N_p) x N_e. Rejects exponents beyond kMaxExponent.
  Matrix transmission(const Vector &w) const {
    const Matrix z = rays * blocks(w) * attenuation.transpose();
    if (z.cwiseAbs().maxCoeff() > kMaxExponent)
      throw std::domain_error(
          "SpectralCtProblem: attenuation exponent out of range");
    return (-z).array().exp();
  }

  Vector forward(const Vector &w) const {
    const Matrix y = transmission(w) * spectra;
    return Eigen::Map<const Vector>(y.data(), y.size());
  }

  /// J u with J the Jacobian of forward at w.
  Vector jacobian_apply(const Matrix &trans, const Vector &u) const {
    const Matrix du = rays * blocks(u) * attenuation.transpose();
    const Matrix y = (-trans.cwiseProduct(du)) * spectra;
    return Eigen::Map<const Vector>(y.data(), y.size());
  }

  /// J^T r.
  Vector jacobian_transpose_apply(const Matrix &trans, const Vector &r) const {
    Eigen::Map<const Matrix> rm(r.data(), n_rays(), n_bins());
    const Matrix m = -trans.cwiseProduct(rm * spectra.transpose());
    const Matrix g = rays.transpose() * m * attenuation;
    return Eigen::Map<const Vector>(g.data(), g.size());
  }

  /// D^T D acting on the first material, zero elsewhere.
  Vector regularizer_apply(const Vector &w) const {
    Vector out = Vector::Zero(w.size());
    out.head(n_pixels()) =
        gradient_op.transpose() * (gradient_op * w.head(n_pixels()));
    return out;
  }

  double value(const Vector &w) const {
    const Vector r = forward(w) - data;
    const double smooth = (gradient_op * w.head(n_pixels())).squaredNorm();
    const double sparse = w.tail(dim() - n_pixels()).sum();
    return 0.5 * r.squaredNorm() + 0.5 * gamma1 * smooth + gamma2 * sparse;
  }

  Vector gradient(const Vector &w) const {
    const Matrix trans = transmission(w);
    const Matrix y = trans * spectra;
    const Vector r = Eigen::Map<const Vector>(y.data(), y.size()) - data;
    Vector g = jacobian_transpose_apply(trans, r) + gamma1 * regularizer_apply(w);
    g.tail(dim() - n_pixels()).array() += gamma2;
    return g;
  }

  static HessianOperator
  gauss_newton_at(std::shared_ptr<const SpectralCtProblem> self,
                  const Vector &w) {
    auto trans = std::make_shared<const Matrix>(self->transmission(w));
    return gauss_newton_operator(
        self->dim(), self->n_data(),
        [self, trans](const Vector &u) {
          return self->jacobian_apply(*trans, u);
        },
        [self, trans](const Vector &r) {
          return self->jacobian_transpose_apply(*trans, r);
        },
        [self](const Vector &u) { return self->regularizer_apply(u); },
        self->gamma1);
  }

  ObjectiveProblem objective() const {
    auto self = std::make_shared<const SpectralCtProblem>(*this);
    ObjectiveProblem p;
    p.n = dim();
    p.value = [self](const Vector &w) { return self->value(w); };
    p.gradient = [self](const Vector &w) { return self->gradient(w); };
    p.hessian_at = [self](const Vector &w) { return gauss_newton_at(self, w); };
    p.bounds = bounds;
    return p;
  }
};

/// Parallel-beam ray matrix for a side x side image on the unit square:
/// n_angles equispaced angles in [0, pi) and `side` detectors per angle.
/// Entry (ray, pixel) is the approximate intersection length, obtained by
/// fine sampling along the ray.
inline Matrix parallel_beam_rays(Index side, Index n_angles,
                                 int samples_per_pixel = 64) {
  const Index n_det = side;
  Matrix a = Matrix::Zero(n_det * n_angles, side * side);
  const double half_len = 0.75;
  const Index n_samples = 2 * side * samples_per_pixel;
  const double ds = 2 * half_len / static_cast<double>(n_samples);
  for (Index p = 0; p < n_angles; ++p) {
    const double theta =
        std::numbers::pi * static_cast<double>(p) / static_cast<double>(n_angles);
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (Index d = 0; d < n_det; ++d) {
      const double t = (static_cast<double>(d) + 0.5) / static_cast<double>(n_det)
                       - 0.5;
      const double ox = 0.5 - t * dy, oy = 0.5 + t * dx;
      for (Index k = 0; k < n_samples; ++k) {
        const double s = -half_len + (static_cast<double>(k) + 0.5) * ds;
        const double px = ox + s * dx, py = oy + s * dy;
        if (px < 0 || px >= 1 || py < 0 || py >= 1)
          continue;
        const Index ix = static_cast<Index>(px * static_cast<double>(side));
        const Index iy = static_cast<Index>(py * static_cast<double>(side));
        a(p * n_det + d, ix + side * iy) += ds;
      }
    }
  }
  return a;
}

/// Forward differences along x and y on a side x side grid (pixel index
/// ix + side * iy).
inline Matrix discrete_gradient(Index side) {
  const Index rows = 2 * side * (side - 1);
  Matrix d = Matrix::Zero(rows, side * side);
  Index r = 0;
  for (Index iy = 0; iy < side; ++iy)
    for (Index ix = 0; ix + 1 < side; ++ix, ++r) {
      d(r, ix + side * iy) = -1;
      d(r, ix + 1 + side * iy) = 1;
    }
  for (Index iy = 0; iy + 1 < side; ++iy)
    for (Index ix = 0; ix < side; ++ix, ++r) {
      d(r, ix + side * iy) = -1;
      d(r, ix + side * (iy + 1)) = 1;
    }
  return d;
}

struct CtOptions {
  Index image_side = 8;
  Index n_materials = 2;
  Index n_energies = 10;
  Index n_bins = 3;
  Index n_angles = 12;
  std::uint64_t seed = 7;
  double gamma1 = 1e-2;
  double gamma2 = 1e-1;
  double upper_bound = 1.5;
  double noise = 1e-3; // relative to the mean photon count
  double intensity = 3;
};

/// Piecewise-constant phantom per material. Material 1 has a disc on a
/// nonzero background plus a hot square exceeding 1.5; further materials are
/// sparse rectangles.
inline Vector ct_phantom(Index side, Index n_materials) {
  const Index nv = side * side;
  Vector w = Vector::Zero(nv * n_materials);
  const double h = 1.0 / static_cast<double>(side);
  for (Index iy = 0; iy < side; ++iy)
    for (Index ix = 0; ix < side; ++ix) {
      const double cx = (static_cast<double>(ix) + 0.5) * h - 0.5;
      const double cy = (static_cast<double>(iy) + 0.5) * h - 0.5;
      const Index pix = ix + side * iy;
      w[pix] = cx * cx + cy * cy < 0.16 ? 1.0 : 0.3;
      if (cx > 0 && cx < 0.26 && cy > 0 && cy < 0.26)
        w[pix] = 2.0;
      for (Index m = 1; m < n_materials; ++m) {
        const double x0 = -0.35 + 0.15 * static_cast<double>(m - 1);
        if (cx > x0 && cx < x0 + 0.25 && cy > -0.3 && cy < 0.05)
          w[m * nv + pix] = 0.8;
      }
    }
  return w;
}

inline SpectralCtProblem make_toy_ct(const CtOptions &opt) {
  const Index side = opt.image_side;
  if (side < 2 || side * side > 256)
    throw std::invalid_argument("make_toy_ct: image_side must be in [2, 16]");
  if (opt.n_materials < 1 || opt.n_energies < 1 || opt.n_bins < 1
      || opt.n_bins > opt.n_energies || opt.n_angles < 1)
    throw std::invalid_argument("make_toy_ct: invalid dimensions");
  if (!(opt.upper_bound > 0))
    throw std::invalid_argument("make_toy_ct: upper_bound must be positive");

  SpectralCtProblem p;
  const Index ne = opt.n_energies;

  // Each energy level falls into exactly one detector window.
  p.spectra = Matrix::Zero(ne, opt.n_bins);
  for (Index e = 0; e < ne; ++e) {
    const double u = (static_cast<double>(e) + 0.5) / static_cast<double>(ne);
    const Index bin = e * opt.n_bins / ne;
    p.spectra(e, bin) = opt.intensity * (0.5 + std::sin(std::numbers::pi * u));
  }

  // Attenuation decays with energy at a material-dependent rate.
  p.attenuation.resize(ne, opt.n_materials);
  for (Index e = 0; e < ne; ++e) {
    const double energy = 1.0 + 3.0 * static_cast<double>(e)
                                    / static_cast<double>(std::max<Index>(ne - 1, 1));
    for (Index m = 0; m < opt.n_materials; ++m) {
      const double a = 0.4 + 0.5 * static_cast<double>(m);
      const double power = 0.5 + 1.0 * static_cast<double>(m);
      p.attenuation(e, m) = 0.15 + a * std::pow(energy, -power);
    }
  }

  p.rays = parallel_beam_rays(side, opt.n_angles);
  p.gradient_op = discrete_gradient(side);
  p.gamma1 = opt.gamma1;
  p.gamma2 = opt.gamma2;
  p.truth = ct_phantom(side, opt.n_materials);
  p.bounds = BoxBounds::uniform(p.dim(), 0.0, opt.upper_bound);

  const Vector clean = p.forward(p.truth);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  const double sigma = opt.noise * clean.mean();
  p.data = clean.unaryExpr([&](double v) { return v + sigma * normal(rng); });
  return p;
}

} // namespace pnkhb

#endif // PNKHB_PROBLEMS_SPECTRAL_CT_HPP
