#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace istab {

/// Quadrature on a reference entity. For the segment the first coordinate is
/// the parameter t in [0,1]; for the triangle the points lie in
/// {x,y >= 0, x+y <= 1}. Weights sum to the reference measure.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int exact_degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

inline constexpr int kMaxQuadratureDegree = 39;

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(int npts, std::vector<double>& x, std::vector<double>& w) {
  x.resize(npts);
  w.resize(npts);
  const int m = (npts + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < npts; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = npts * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[npts - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[npts - 1 - i] = w[i];
  }
}

inline void check_degree(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature: degree must be >= 0");
  if (degree > kMaxQuadratureDegree)
    throw std::runtime_error("quadrature: requested degree exceeds implementation cap");
}

}  // namespace detail

/// Gauss-Legendre rule on [0,1], exact for polynomials of the given degree.
inline QuadratureRule segment_quadrature(int degree) {
  detail::check_degree(degree);
  const int npts = degree / 2 + 1;
  std::vector<double> x, w;
  detail::gauss_legendre(npts, x, w);
  QuadratureRule rule;
  rule.exact_degree = degree;
  for (int i = 0; i < npts; ++i) {
    rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

/// Collapsed-coordinate Gauss product rule on the reference triangle,
/// exact for bivariate polynomials of total degree <= degree.
///
/// Map from the square: (u,v) -> (u(1-v), v) with Jacobian (1-v). The
/// integrand in u has degree <= degree; in v it has degree <= degree+1.
inline QuadratureRule triangle_quadrature(int degree) {
  detail::check_degree(degree);
  const int nu = degree / 2 + 1;
  const int nv = (degree + 1) / 2 + 1;
  std::vector<double> xu, wu, xv, wv;
  detail::gauss_legendre(nu, xu, wu);
  detail::gauss_legendre(nv, xv, wv);
  QuadratureRule rule;
  rule.exact_degree = degree;
  for (int j = 0; j < nv; ++j) {
    const double v = 0.5 * (xv[j] + 1.0);
    for (int i = 0; i < nu; ++i) {
      const double u = 0.5 * (xu[i] + 1.0);
      rule.points.push_back({u * (1.0 - v), v});
      rule.weights.push_back(0.25 * wu[i] * wv[j] * (1.0 - v));
    }
  }
  return rule;
}

}  // namespace istab
