#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "istab/quadrature.hpp"

namespace istab {

enum class RefEntity { Triangle, Segment };

/// Values and reference derivatives of a nodal basis at a point set.
/// Storage is point-major: values[q*dim + i]. On the segment only the first
/// gradient/hessian component is used.
struct BasisTabulation {
  int order = 0;
  int dim = 0;
  std::vector<double> values;
  std::vector<std::array<double, 2>> grads;
  std::vector<std::array<double, 3>> hess;  // dxx, dxy, dyy

  double value(int q, int i) const { return values[q * dim + i]; }
  const std::array<double, 2>& grad(int q, int i) const { return grads[q * dim + i]; }
  const std::array<double, 3>& hessian(int q, int i) const { return hess[q * dim + i]; }
};

namespace detail {

/// Value and first two derivatives of A_m(t) = prod_{r<m} (k t - r)/(m - r),
/// the 1D factor of the equispaced-lattice Lagrange basis on a k-simplex.
inline std::array<double, 3> lattice_factor(int k, int m, double t) {
  double v = 1.0, d = 0.0, s = 0.0;
  for (int r = 0; r < m; ++r) {
    const double f = (k * t - r) / static_cast<double>(m - r);
    const double fp = k / static_cast<double>(m - r);
    s = s * f + 2.0 * d * fp;
    d = d * f + v * fp;
    v = v * f;
  }
  return {v, d, s};
}

}  // namespace detail

/// Equispaced Lagrange basis of order k on the reference triangle or segment.
/// Node n of the triangle, indexed by (i,j) with i+j <= k looping j outer,
/// sits at (i/k, j/k); segment node i sits at t = i/k.
class LagrangeBasis {
 public:
  LagrangeBasis(RefEntity entity, int k) : entity_(entity), k_(k) {
    if (k < 1) throw std::invalid_argument("LagrangeBasis: order must be >= 1");
    if (entity == RefEntity::Triangle) {
      for (int j = 0; j <= k; ++j)
        for (int i = 0; i <= k - j; ++i)
          nodes_.push_back({static_cast<double>(i) / k, static_cast<double>(j) / k});
    } else {
      for (int i = 0; i <= k; ++i) nodes_.push_back({static_cast<double>(i) / k, 0.0});
    }
  }

  RefEntity entity() const { return entity_; }
  int order() const { return k_; }
  int dim() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::array<double, 2>>& nodes() const { return nodes_; }

  /// Value, reference gradient and reference hessian of every basis function
  /// at one point.
  void eval(std::array<double, 2> p, double* val, std::array<double, 2>* grad = nullptr,
            std::array<double, 3>* hess = nullptr) const {
    if (entity_ == RefEntity::Triangle) {
      const double l0 = 1.0 - p[0] - p[1];
      int n = 0;
      for (int j = 0; j <= k_; ++j) {
        const auto F2 = detail::lattice_factor(k_, j, p[1]);
        for (int i = 0; i <= k_ - j; ++i, ++n) {
          const auto F0 = detail::lattice_factor(k_, k_ - i - j, l0);
          const auto F1 = detail::lattice_factor(k_, i, p[0]);
          val[n] = F0[0] * F1[0] * F2[0];
          if (grad) {
            grad[n][0] = -F0[1] * F1[0] * F2[0] + F0[0] * F1[1] * F2[0];
            grad[n][1] = -F0[1] * F1[0] * F2[0] + F0[0] * F1[0] * F2[1];
          }
          if (hess) {
            hess[n][0] = F0[2] * F1[0] * F2[0] - 2.0 * F0[1] * F1[1] * F2[0] + F0[0] * F1[2] * F2[0];
            hess[n][1] = F0[2] * F1[0] * F2[0] - F0[1] * F1[1] * F2[0] - F0[1] * F1[0] * F2[1] +
                         F0[0] * F1[1] * F2[1];
            hess[n][2] = F0[2] * F1[0] * F2[0] - 2.0 * F0[1] * F1[0] * F2[1] + F0[0] * F1[0] * F2[2];
          }
        }
      }
    } else {
      const double t = p[0];
      for (int i = 0; i <= k_; ++i) {
        const auto F0 = detail::lattice_factor(k_, k_ - i, 1.0 - t);
        const auto F1 = detail::lattice_factor(k_, i, t);
        val[i] = F0[0] * F1[0];
        if (grad) {
          grad[i][0] = -F0[1] * F1[0] + F0[0] * F1[1];
          grad[i][1] = 0.0;
        }
        if (hess) {
          hess[i][0] = F0[2] * F1[0] - 2.0 * F0[1] * F1[1] + F0[0] * F1[2];
          hess[i][1] = 0.0;
          hess[i][2] = 0.0;
        }
      }
    }
  }

  BasisTabulation tabulate(const std::vector<std::array<double, 2>>& points,
                           bool with_hess = false) const {
    BasisTabulation tab;
    tab.order = k_;
    tab.dim = dim();
    const int np = static_cast<int>(points.size());
    tab.values.resize(np * tab.dim);
    tab.grads.resize(np * tab.dim);
    if (with_hess) tab.hess.resize(np * tab.dim);
    for (int q = 0; q < np; ++q)
      eval(points[q], &tab.values[q * tab.dim], &tab.grads[q * tab.dim],
           with_hess ? &tab.hess[q * tab.dim] : nullptr);
    return tab;
  }

 private:
  RefEntity entity_;
  int k_;
  std::vector<std::array<double, 2>> nodes_;
};

inline BasisTabulation tabulate_lagrange(RefEntity entity, int k,
                                         const std::vector<std::array<double, 2>>& points) {
  return LagrangeBasis(entity, k).tabulate(points, true);
}

}  // namespace istab
