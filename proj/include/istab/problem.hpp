#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "istab/space.hpp"

namespace istab {

/// Coefficients, data and discretization parameters of one problem instance.
/// Boundary facets all carry default_tag; per the model problem, kappa = 0
/// forces a pure-Neumann (inflow-data) setup and kappa > 0 presets here use
/// homogeneous Dirichlet data everywhere.
struct ProblemSpec {
  std::string name = "custom";
  double mu = 0.0;
  double kappa = 0.0;
  double alpha = 0.0;
  int k = 1;
  int l = 1;
  VectorFn advection;
  ScalarFn source;
  ScalarFn exact;  // may be empty
  BoundaryTag default_tag = BoundaryTag::Dirichlet;

  int data_order() const { return k + 6; }

  void validate() const {
    if (mu < 0.0 || kappa < 0.0 || alpha < 0.0)
      throw std::invalid_argument("ProblemSpec: mu, kappa, alpha must be >= 0");
    if (k < 1) throw std::invalid_argument("ProblemSpec: k must be >= 1");
    if (l != 0 && l != 1) throw std::invalid_argument("ProblemSpec: l must be 0 or 1");
    if (kappa == 0.0 && default_tag == BoundaryTag::Dirichlet)
      throw std::invalid_argument("ProblemSpec: kappa = 0 requires a Neumann-only boundary");
    if (!advection && mu == 0.0 && kappa == 0.0)
      throw std::invalid_argument("ProblemSpec: degenerate operator (mu = kappa = 0, a = 0)");
  }
};

inline void apply_boundary_tags(Mesh& mesh, const ProblemSpec& spec) {
  for (int f = 0; f < mesh.num_facets(); ++f)
    if (mesh.is_boundary_facet(f)) mesh.facet_tag[f] = spec.default_tag;
}

/// zeta upwind indicator: 1 on inflow (a.n < 0), 0 on outflow (a.n >= 0).
inline double eval_zeta(double a_dot_n) { return a_dot_n < 0.0 ? 1.0 : 0.0; }

// ---- presets (section "Observed stability and convergence properties") ----

/// mu=1, a=(0.8,0.6), kappa=0 on (-1,1)^2; u = 1 + sin(pi (1+x)(1+y)^2 / 8),
/// inflow data u = 1.
inline ProblemSpec preset_hyperbolic_bey(int k, int l = 1) {
  ProblemSpec s;
  s.name = "hyperbolic_bey";
  s.mu = 1.0;
  s.kappa = 0.0;
  s.alpha = 0.0;
  s.k = k;
  s.l = l;
  s.default_tag = BoundaryTag::Neumann;
  s.advection = [](Point2) { return std::array<double, 2>{0.8, 0.6}; };
  s.exact = [](Point2 p) { return 1.0 + std::sin(M_PI * (1.0 + p.x) * (1.0 + p.y) * (1.0 + p.y) / 8.0); };
  s.source = [](Point2 p) {
    const double g = (1.0 + p.x) * (1.0 + p.y) * (1.0 + p.y) / 8.0;
    const double u = 1.0 + std::sin(M_PI * g);
    const double cg = M_PI * std::cos(M_PI * g);
    const double ux = cg * (1.0 + p.y) * (1.0 + p.y) / 8.0;
    const double uy = cg * (1.0 + p.x) * (1.0 + p.y) / 4.0;
    return u + 0.8 * ux + 0.6 * uy;
  };
  return s;
}

/// mu=0, a=0, kappa=1 on (-1,1)^2; u = sin(pi x) sin(pi y), Dirichlet.
inline ProblemSpec preset_elliptic_sine(int k, double alpha, int l = 1) {
  ProblemSpec s;
  s.name = "elliptic_sine";
  s.mu = 0.0;
  s.kappa = 1.0;
  s.alpha = alpha;
  s.k = k;
  s.l = l;
  s.default_tag = BoundaryTag::Dirichlet;
  s.exact = [](Point2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  s.source = [](Point2 p) { return 2.0 * M_PI * M_PI * std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  return s;
}

/// Divergence-free field from the stream function psi = e^x y sin y.
inline std::array<double, 2> advection_exp_field(Point2 p) {
  return {std::exp(p.x) * (p.y * std::cos(p.y) + std::sin(p.y)),
          -std::exp(p.x) * p.y * std::sin(p.y)};
}

/// mu=0, a = exponential vortex field, kappa parameter, u = sin(pi x) sin(pi y).
inline ProblemSpec preset_advdiff_exp(int k, double kappa, double alpha, int l = 1) {
  ProblemSpec s;
  s.name = "advdiff_exp";
  s.mu = 0.0;
  s.kappa = kappa;
  s.alpha = alpha;
  s.k = k;
  s.l = l;
  s.default_tag = BoundaryTag::Dirichlet;
  s.advection = advection_exp_field;
  s.exact = [](Point2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  s.source = [kappa](Point2 p) {
    const auto a = advection_exp_field(p);
    const double sx = std::sin(M_PI * p.x), sy = std::sin(M_PI * p.y);
    const double cx = std::cos(M_PI * p.x), cy = std::cos(M_PI * p.y);
    return a[0] * M_PI * cx * sy + a[1] * M_PI * sx * cy + 2.0 * M_PI * M_PI * kappa * sx * sy;
  };
  return s;
}

/// Bivariate polynomial sum_ij c[i][j] x^i y^j for manufactured solutions.
struct Poly2 {
  std::vector<std::vector<double>> c;

  double value(Point2 p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c[i].size(); ++j)
        s += c[i][j] * std::pow(p.x, static_cast<double>(i)) *
             std::pow(p.y, static_cast<double>(j));
    return s;
  }
  std::array<double, 2> grad(Point2 p) const {
    std::array<double, 2> g = {0.0, 0.0};
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c[i].size(); ++j) {
        if (i >= 1)
          g[0] += c[i][j] * i * std::pow(p.x, static_cast<double>(i - 1)) *
                  std::pow(p.y, static_cast<double>(j));
        if (j >= 1)
          g[1] += c[i][j] * j * std::pow(p.x, static_cast<double>(i)) *
                  std::pow(p.y, static_cast<double>(j - 1));
      }
    return g;
  }
  double laplacian(Point2 p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c[i].size(); ++j) {
        if (i >= 2)
          s += c[i][j] * i * (i - 1) * std::pow(p.x, static_cast<double>(i - 2)) *
               std::pow(p.y, static_cast<double>(j));
        if (j >= 2)
          s += c[i][j] * j * (j - 1) * std::pow(p.x, static_cast<double>(i)) *
               std::pow(p.y, static_cast<double>(j - 2));
      }
    return s;
  }
  int degree() const {
    int d = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c[i].size(); ++j)
        if (c[i][j] != 0.0) d = std::max(d, static_cast<int>(i + j));
    return d;
  }
};

/// Manufactured problem with constant advection and a polynomial exact
/// solution; the source is derived analytically as f = mu u + a.grad u
/// - kappa lap u. With tag = Neumann the boundary data g comes from the
/// exact solution, so polynomial solutions of degree <= k are reproduced
/// exactly by consistency.
inline ProblemSpec preset_custom_poly(int k, int l, double mu, double kappa, double alpha,
                                      std::array<double, 2> a, Poly2 u,
                                      BoundaryTag tag = BoundaryTag::Neumann) {
  ProblemSpec s;
  s.name = "custom";
  s.mu = mu;
  s.kappa = kappa;
  s.alpha = alpha;
  s.k = k;
  s.l = l;
  s.default_tag = tag;
  if (a[0] != 0.0 || a[1] != 0.0)
    s.advection = [a](Point2) { return a; };
  s.exact = [u](Point2 p) { return u.value(p); };
  s.source = [u, mu, kappa, a](Point2 p) {
    const auto g = u.grad(p);
    return mu * u.value(p) + a[0] * g[0] + a[1] * g[1] - kappa * u.laplacian(p);
  };
  return s;
}

}  // namespace istab
