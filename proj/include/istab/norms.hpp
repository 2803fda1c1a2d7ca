#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "istab/assembly.hpp"
#include "istab/parallel.hpp"

namespace istab {

/// A pair v = (v, vbar) presented through quadrature-point evaluators bound
/// to a Context: the cell part at the volume rule, the cell-side trace and
/// the facet part at the edge rule (same physical points for both, so jumps
/// vbar - v are formed pointwise). Error fields are represented this way as
/// differences of the order-(k+6) data interpolant and the discrete solution,
/// never as coefficient subtractions across unequal spaces.
struct PairEvaluator {
  std::function<double(int c, int q)> vol_value;
  std::function<std::array<double, 2>(int c, int q)> vol_grad;
  std::function<std::array<double, 3>(int c, int q)> vol_hess;
  std::function<double(int c, int e, int q)> edge_value;
  std::function<std::array<double, 2>(int c, int e, int q)> edge_grad;
  std::function<double(int c, int e, int q)> edge_bar;
};

namespace detail {

inline std::array<double, 3> cell_hessian(const Context& ctx, const Field& u, int c,
                                          const BasisTabulation& tab, int q) {
  std::array<double, 3> h = {0.0, 0.0, 0.0};
  for (int i = 0; i < tab.dim; ++i) {
    const double ci = u.coeffs[ctx.cell_space().dof(c, i)];
    h[0] += ci * tab.hessian(q, i)[0];
    h[1] += ci * tab.hessian(q, i)[1];
    h[2] += ci * tab.hessian(q, i)[2];
  }
  return ctx.geometry(c).push_hessian(h);
}

inline std::array<double, 3> data_hessian(const Context& ctx, const Field& u, int c,
                                          const BasisTabulation& tab, int q) {
  std::array<double, 3> h = {0.0, 0.0, 0.0};
  for (int i = 0; i < tab.dim; ++i) {
    const double ci = u.coeffs[ctx.data_space().dof(c, i)];
    h[0] += ci * tab.hessian(q, i)[0];
    h[1] += ci * tab.hessian(q, i)[1];
    h[2] += ci * tab.hessian(q, i)[2];
  }
  return ctx.geometry(c).push_hessian(h);
}

}  // namespace detail

/// Evaluators of a discrete pair (u_h, ubar_h).
inline PairEvaluator discrete_pair(const Context& ctx, const Field& u, const Field& ubar) {
  PairEvaluator p;
  p.vol_value = [&ctx, &u](int c, int q) { return ctx.cell_value(u, c, ctx.cell_vol(), q); };
  p.vol_grad = [&ctx, &u](int c, int q) { return ctx.cell_gradient(u, c, ctx.cell_vol(), q); };
  p.vol_hess = [&ctx, &u](int c, int q) {
    return detail::cell_hessian(ctx, u, c, ctx.cell_vol(), q);
  };
  p.edge_value = [&ctx, &u](int c, int e, int q) {
    const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
    (void)fct;
    return ctx.cell_value(u, c, ctx.cell_edge(e, orient), q);
  };
  p.edge_grad = [&ctx, &u](int c, int e, int q) {
    const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
    (void)fct;
    return ctx.cell_gradient(u, c, ctx.cell_edge(e, orient), q);
  };
  p.edge_bar = [&ctx, &ubar](int c, int e, int q) {
    const int fct = ctx.mesh().cell_facets[c][e].first;
    return ctx.facet_value(ubar, fct, q);
  };
  return p;
}

/// Evaluators of the error pair (I_{k+6} u - u_h, trace(I_{k+6} u) - ubar_h).
/// The trace of the cellwise data interpolant is single-valued on facets
/// (edge lattice nodes of adjacent cells coincide), so evaluating it from the
/// owning cell's side is well-defined.
inline PairEvaluator error_pair(const Context& ctx, const Field& u, const Field& ubar) {
  if (!ctx.has_exact()) throw std::invalid_argument("error_pair: spec has no exact solution");
  PairEvaluator p;
  p.vol_value = [&ctx, &u](int c, int q) {
    return ctx.exact_at(c, ctx.data_vol(), q) - ctx.cell_value(u, c, ctx.cell_vol(), q);
  };
  p.vol_grad = [&ctx, &u](int c, int q) {
    const auto ge = ctx.data_gradient(ctx.data_u(), c, ctx.data_vol(), q);
    const auto gh = ctx.cell_gradient(u, c, ctx.cell_vol(), q);
    return std::array<double, 2>{ge[0] - gh[0], ge[1] - gh[1]};
  };
  p.vol_hess = [&ctx, &u](int c, int q) {
    const auto he = detail::data_hessian(ctx, ctx.data_u(), c, ctx.data_vol(), q);
    const auto hh = detail::cell_hessian(ctx, u, c, ctx.cell_vol(), q);
    return std::array<double, 3>{he[0] - hh[0], he[1] - hh[1], he[2] - hh[2]};
  };
  p.edge_value = [&ctx, &u](int c, int e, int q) {
    const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
    (void)fct;
    return ctx.exact_at(c, ctx.data_edge(e, orient), q) -
           ctx.cell_value(u, c, ctx.cell_edge(e, orient), q);
  };
  p.edge_grad = [&ctx, &u](int c, int e, int q) {
    const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
    (void)fct;
    const auto ge = ctx.data_gradient(ctx.data_u(), c, ctx.data_edge(e, orient), q);
    const auto gh = ctx.cell_gradient(u, c, ctx.cell_edge(e, orient), q);
    return std::array<double, 2>{ge[0] - gh[0], ge[1] - gh[1]};
  };
  p.edge_bar = [&ctx, &ubar](int c, int e, int q) {
    const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
    return ctx.exact_at(c, ctx.data_edge(e, orient), q) - ctx.facet_value(ubar, fct, q);
  };
  return p;
}

namespace detail {

template <typename CellTerm>
double cell_sum(const Context& ctx, CellTerm&& term) {
  return ordered_parallel_sum(ctx.mesh().num_cells(), term);
}

/// Volume integral over cell c of fn(q) against the volume rule.
template <typename F>
double cell_volume_integral(const Context& ctx, int c, F&& fn) {
  double s = 0.0;
  for (int q = 0; q < ctx.volume_rule().size(); ++q)
    s += ctx.volume_rule().weights[q] * ctx.geometry(c).detJ * fn(q);
  return s;
}

/// Boundary integral over the three edges of cell c of fn(e, q, n, a_n).
template <typename F>
double cell_edge_integral(const Context& ctx, int c, F&& fn) {
  double s = 0.0;
  const Mesh& mesh = ctx.mesh();
  for (int e = 0; e < 3; ++e) {
    const auto [fct, orient] = mesh.cell_facets[c][e];
    (void)orient;
    const double len = mesh.facet_length(fct);
    const auto n = mesh.facet_normal(c, e);
    for (int q = 0; q < ctx.edge_rule().size(); ++q) {
      const auto a = ctx.advection_at(c, ctx.data_edge(e, mesh.cell_facets[c][e].second), q);
      const double an = a[0] * n[0] + a[1] * n[1];
      s += ctx.edge_rule().weights[q] * len * fn(e, fct, q, an);
    }
  }
  return s;
}

}  // namespace detail

/// ||v||_0 over Omega of the cell part.
inline double l2_norm(const Context& ctx, const PairEvaluator& v) {
  const double s2 = detail::cell_sum(ctx, [&](int c) {
    return detail::cell_volume_integral(ctx, c, [&](int q) {
      const double w = v.vol_value(c, q);
      return w * w;
    });
  });
  return std::sqrt(s2);
}

/// Stability norm: mu ||v||^2 + sum_K h_K ||a.grad v||^2_K
/// + sum_K ||a_n^{1/2} (vbar - v)||^2_dK + ||a_n^{1/2} vbar||^2_Gamma.
inline double norm_A(const Context& ctx, const PairEvaluator& v) {
  const Mesh& mesh = ctx.mesh();
  const double mu = ctx.spec().mu;
  const double s2 = detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
      const double w = v.vol_value(c, q);
      const auto g = v.vol_grad(c, q);
      const auto a = ctx.advection_at(c, ctx.data_vol(), q);
      const double adg = a[0] * g[0] + a[1] * g[1];
      return mu * w * w + mesh.h_cell[c] * adg * adg;
    });
    s += detail::cell_edge_integral(ctx, c, [&](int e, int fct, int q, double an) {
      const double jump = v.edge_bar(c, e, q) - v.edge_value(c, e, q);
      double t = std::abs(an) * jump * jump;
      if (mesh.is_boundary_facet(fct)) {
        const double vb = v.edge_bar(c, e, q);
        t += std::abs(an) * vb * vb;
      }
      return t;
    });
    return s;
  });
  return std::sqrt(s2);
}

/// Continuity norm: norm_A^2 plus sum_K h_K^{-1} ||v||^2_K
/// + sum_K ||a_n^{1/2} vbar||^2 on inflow parts + ||a_n^{1/2} v||^2 on
/// outflow parts of each cell boundary (classified pointwise).
inline double norm_Aprime(const Context& ctx, const PairEvaluator& v) {
  const Mesh& mesh = ctx.mesh();
  const double a2 = norm_A(ctx, v);
  const double extra = detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
                 const double w = v.vol_value(c, q);
                 return w * w;
               }) /
               mesh.h_cell[c];
    s += detail::cell_edge_integral(ctx, c, [&](int e, int /*fct*/, int q, double an) {
      if (an < 0.0) {
        const double vb = v.edge_bar(c, e, q);
        return std::abs(an) * vb * vb;
      }
      const double w = v.edge_value(c, e, q);
      return std::abs(an) * w * w;
    });
    return s;
  });
  return std::sqrt(a2 * a2 + extra);
}

/// Diffusive stability norm: sum_K kappa ||grad v||^2_K
/// + sum_K (alpha kappa / h_K) ||vbar - v||^2_dK.
inline double norm_D(const Context& ctx, const PairEvaluator& v) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.kappa > 0.0)) throw std::invalid_argument("norm_D: kappa must be > 0");
  const Mesh& mesh = ctx.mesh();
  const double s2 = detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
      const auto g = v.vol_grad(c, q);
      return spec.kappa * (g[0] * g[0] + g[1] * g[1]);
    });
    const double gamma = spec.alpha * spec.kappa / mesh.h_cell[c];
    s += detail::cell_edge_integral(ctx, c, [&](int e, int /*fct*/, int q, double /*an*/) {
      const double jump = v.edge_bar(c, e, q) - v.edge_value(c, e, q);
      return gamma * jump * jump;
    });
    return s;
  });
  return std::sqrt(s2);
}

/// norm_D^2 plus sum_K (h_K^2 kappa / alpha) |v|^2_{2,K}.
inline double norm_Dprime(const Context& ctx, const PairEvaluator& v) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("norm_Dprime: alpha must be > 0");
  const double d = norm_D(ctx, v);
  const Mesh& mesh = ctx.mesh();
  const double extra = detail::cell_sum(ctx, [&](int c) {
    const double w = mesh.h_cell[c] * mesh.h_cell[c] * spec.kappa / spec.alpha;
    return w * detail::cell_volume_integral(ctx, c, [&](int q) {
             const auto h = v.vol_hess(c, q);
             return h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2];
           });
  });
  return std::sqrt(d * d + extra);
}

/// ||I_{k+6} u - u_h||_0 by the shared exact quadrature.
inline double l2_error(const Context& ctx, const Field& u_h) {
  Field dummy;
  dummy.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
  return l2_norm(ctx, error_pair(ctx, u_h, dummy));
}

}  // namespace istab
