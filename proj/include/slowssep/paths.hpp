#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "slowssep/error.hpp"

namespace slowssep {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Vec<Scalar> uniform_grid(Scalar horizon, Eigen::Index intervals) {
  require(intervals >= 1, "uniform_grid: need at least one interval");
  require(horizon > Scalar(0), "uniform_grid: horizon must be positive");
  Vec<Scalar> g = Vec<Scalar>::LinSpaced(intervals + 1, Scalar(0), horizon);
  g(intervals) = horizon;
  return g;
}

/// Scalar function of time, piecewise linear between grid nodes.
template <typename Scalar>
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Vec<Scalar> grid, Vec<Scalar> values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(grid_.size() >= 2, "grid function: need at least two nodes");
    require(grid_.size() == values_.size(), "grid function: grid/values size mismatch");
    for (Eigen::Index k = 1; k < grid_.size(); ++k)
      require(grid_(k) > grid_(k - 1), "grid function: grid must be strictly increasing");
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      require(std::isfinite(static_cast<double>(values_(k))), "grid function: non-finite value");
  }

  const Vec<Scalar>& grid() const { return grid_; }
  const Vec<Scalar>& values() const { return values_; }
  Eigen::Index nodes() const { return grid_.size(); }
  Scalar start() const { return grid_(0); }
  Scalar horizon() const { return grid_(grid_.size() - 1); }

  /// Index k of the segment [t_k, t_{k+1}] containing t (clamped to the grid).
  Eigen::Index segment(Scalar t) const {
    const Scalar* first = grid_.data();
    const Scalar* last = first + grid_.size();
    auto it = std::upper_bound(first, last, t);
    Eigen::Index k = static_cast<Eigen::Index>(it - first) - 1;
    return std::clamp<Eigen::Index>(k, 0, grid_.size() - 2);
  }

  Scalar operator()(Scalar t) const {
    if (t <= grid_(0)) return values_(0);
    if (t >= horizon()) return values_(grid_.size() - 1);
    const Eigen::Index k = segment(t);
    const Scalar w = (t - grid_(k)) / (grid_(k + 1) - grid_(k));
    return values_(k) + w * (values_(k + 1) - values_(k));
  }

  /// Slope of the segment containing t.
  Scalar slope(Scalar t) const {
    const Eigen::Index k = segment(t);
    return (values_(k + 1) - values_(k)) / (grid_(k + 1) - grid_(k));
  }

  /// True when the grid spans [0, T] up to a relative tolerance.
  bool covers(Scalar horizon_wanted, Scalar tol = Scalar(1e-9)) const {
    const Scalar scale = std::max(Scalar(1), std::abs(horizon_wanted));
    return std::abs(grid_(0)) <= tol * scale && horizon() >= horizon_wanted - tol * scale;
  }

 protected:
  Vec<Scalar> grid_;
  Vec<Scalar> values_;
};

/// Tilt control G(t); piecewise linear on its grid.
template <typename Scalar>
class BasicControlPath : public GridFunction<Scalar> {
 public:
  using GridFunction<Scalar>::GridFunction;

  static BasicControlPath constant(Scalar value, Scalar horizon) {
    Vec<Scalar> g(2), v(2);
    g << Scalar(0), horizon;
    v << value, value;
    return BasicControlPath(g, v);
  }

  static BasicControlPath sample(const std::function<Scalar(Scalar)>& f, const Vec<Scalar>& grid) {
    Vec<Scalar> v(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) v(k) = f(grid(k));
    return BasicControlPath(grid, v);
  }

  bool is_zero() const { return (this->values_.array() == Scalar(0)).all(); }

  /// Largest |G| over the grid (attained at a node for piecewise linear G).
  Scalar sup_norm() const { return this->values_.cwiseAbs().maxCoeff(); }

  /// Exact integral of exp(sign * G(s)) over [t0, t1].
  Scalar integrate_exp(Scalar t0, Scalar t1, int sign = 1) const {
    if (t1 <= t0) return Scalar(0);
    Scalar total = 0;
    Scalar a = t0;
    while (a < t1) {
      Scalar b = t1;
      if (a < this->grid_(0)) {
        b = std::min(t1, this->grid_(0));
      } else if (a < this->horizon()) {
        b = std::min(t1, this->grid_(this->segment(a) + 1));
      }
      const Scalar ga = sign * (*this)(a);
      const Scalar d = sign * (*this)(b) - ga;
      // exp(ga) * h * (e^d - 1)/d, with the removable singularity at d = 0
      const Scalar factor = std::abs(d) < Scalar(1e-12) ? Scalar(1) + d / 2 : std::expm1(d) / d;
      total += std::exp(ga) * (b - a) * factor;
      a = b;
    }
    return total;
  }
};

/// Total-mass trajectory a(t) in [0,1], optionally carrying a'(t) at the nodes.
template <typename Scalar>
class BasicMassPath : public GridFunction<Scalar> {
 public:
  BasicMassPath() = default;
  BasicMassPath(Vec<Scalar> grid, Vec<Scalar> values, std::optional<Vec<Scalar>> derivative = std::nullopt)
      : GridFunction<Scalar>(std::move(grid), std::move(values)), derivative_(std::move(derivative)) {
    for (Eigen::Index k = 0; k < this->values_.size(); ++k)
      require(this->values_(k) >= Scalar(0) && this->values_(k) <= Scalar(1), "mass path: values must lie in [0,1]");
    if (derivative_) require(derivative_->size() == this->values_.size(), "mass path: derivative size mismatch");
  }

  static BasicMassPath sample(const std::function<Scalar(Scalar)>& a, const std::function<Scalar(Scalar)>& da,
                              const Vec<Scalar>& grid) {
    Vec<Scalar> v(grid.size()), d(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      v(k) = a(grid(k));
      d(k) = da(grid(k));
    }
    return BasicMassPath(grid, v, d);
  }

  static BasicMassPath sample(const std::function<Scalar(Scalar)>& a, const Vec<Scalar>& grid) {
    Vec<Scalar> v(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) v(k) = a(grid(k));
    return BasicMassPath(grid, v);
  }

  bool has_derivative() const { return derivative_.has_value(); }

  /// Supplied derivative, or second-order finite differences (one-sided at the ends).
  Vec<Scalar> derivative() const {
    if (derivative_) return *derivative_;
    const auto& t = this->grid_;
    const auto& a = this->values_;
    const Eigen::Index n = t.size();
    Vec<Scalar> d(n);
    if (n == 2) {
      d.setConstant((a(1) - a(0)) / (t(1) - t(0)));
      return d;
    }
    auto three_point = [&](Eigen::Index i0, Eigen::Index i1, Eigen::Index i2, Scalar x) {
      const Scalar x0 = t(i0), x1 = t(i1), x2 = t(i2);
      return a(i0) * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) + a(i1) * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
             a(i2) * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    };
    d(0) = three_point(0, 1, 2, t(0));
    for (Eigen::Index k = 1; k + 1 < n; ++k) d(k) = three_point(k - 1, k, k + 1, t(k));
    d(n - 1) = three_point(n - 3, n - 2, n - 1, t(n - 1));
    return d;
  }

  /// Restriction to nodes [first, last], shifted so it starts at time 0.
  BasicMassPath slice(Eigen::Index first, Eigen::Index last) const {
    require(first >= 0 && last < this->nodes() && last - first >= 1, "mass path: bad slice");
    const Eigen::Index n = last - first + 1;
    Vec<Scalar> g = this->grid_.segment(first, n).array() - this->grid_(first);
    Vec<Scalar> v = this->values_.segment(first, n);
    return BasicMassPath(g, v, Vec<Scalar>(derivative().segment(first, n)));
  }

 private:
  std::optional<Vec<Scalar>> derivative_;
};

using ControlPath = BasicControlPath<double>;
using MassPath = BasicMassPath<double>;
using VectorXd = Vec<double>;

}  // namespace slowssep
