//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_BOUNDS_HPP
#define PNKHB_BOUNDS_HPP

#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace pnkhb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-coordinate box l <= x <= u. Entries of lower may be -inf and entries
/// of upper may be +inf.
class BoxBounds {
public:
  BoxBounds() = default;

  BoxBounds(Vector lower, Vector upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size())
      throw std::invalid_argument("BoxBounds: lower/upper size mismatch");
    for (Index i = 0; i < lower_.size(); ++i) {
      if (std::isnan(lower_[i]) || std::isnan(upper_[i]))
        throw std::invalid_argument("BoxBounds: NaN bound");
      if (lower_[i] > upper_[i])
        throw std::invalid_argument("BoxBounds: lower > upper at index "
                                    + std::to_string(i));
      if (lower_[i] == kInf || upper_[i] == -kInf)
        throw std::invalid_argument("BoxBounds: empty coordinate range");
    }
  }

  static BoxBounds unbounded(Index n) {
    return { Vector::Constant(n, -kInf), Vector::Constant(n, kInf) };
  }

  static BoxBounds uniform(Index n, double lo, double hi) {
    return { Vector::Constant(n, lo), Vector::Constant(n, hi) };
  }

  Index size() const { return lower_.size(); }
  const Vector &lower() const { return lower_; }
  const Vector &upper() const { return upper_; }
  double lower(Index i) const { return lower_[i]; }
  double upper(Index i) const { return upper_[i]; }

  bool has_lower(Index i) const { return std::isfinite(lower_[i]); }
  bool has_upper(Index i) const { return std::isfinite(upper_[i]); }
  bool is_fixed(Index i) const { return lower_[i] == upper_[i]; }

  /// Componentwise max(min(y, u), l).
  Vector clamp(const Vector &y) const {
    return y.cwiseMin(upper_).cwiseMax(lower_);
  }

  bool contains(const Vector &x) const {
    if (x.size() != size())
      return false;
    for (Index i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower_[i] && x[i] <= upper_[i]))
        return false;
    return true;
  }

  /// Restriction to the listed coordinates, in the given order.
  template <class IndexRange>
  BoxBounds subset(const IndexRange &idx) const {
    Vector lo(static_cast<Index>(std::size(idx)));
    Vector hi(lo.size());
    Index k = 0;
    for (auto i: idx) {
      lo[k] = lower_[i];
      hi[k] = upper_[i];
      ++k;
    }
    return { std::move(lo), std::move(hi) };
  }

private:
  Vector lower_;
  Vector upper_;
};

} // namespace pnkhb

#endif // PNKHB_BOUNDS_HPP
