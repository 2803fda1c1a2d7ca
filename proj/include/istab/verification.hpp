#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "istab/norms.hpp"
#include "istab/solver.hpp"

namespace istab {

struct InfSupReport {
  double beta = 0.0;
  int n_dofs = 0;
};

namespace detail {

inline int facet_free_dof(const Context& ctx, int c, int m) {
  const FacetSpace& fs = ctx.facet_space();
  const int nfl = fs.k + 1;
  const int fct = ctx.mesh().cell_facets[c][m / nfl].first;
  return fs.free_index[fs.dof(fct, m % nfl)];
}

}  // namespace detail

/// Direct quadrature-loop evaluation of the advective bilinear form B_A(w, v)
/// as written: sum_K int (mu w v - w a.grad v) plus the upwinded facet terms
/// -int_{dK+} a.n w (vbar - v) - int_{dK-} a.n wbar (vbar - v) and the
/// outflow-boundary term int_{Gamma+} a.n wbar vbar. Independent of the
/// local-matrix assembler; used as the operator-equality oracle.
inline double direct_B_A(const Context& ctx, const PairEvaluator& w, const PairEvaluator& v) {
  const Mesh& mesh = ctx.mesh();
  const double mu = ctx.spec().mu;
  return detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
      const auto a = ctx.advection_at(c, ctx.data_vol(), q);
      const auto gv = v.vol_grad(c, q);
      return w.vol_value(c, q) * (mu * v.vol_value(c, q) - (a[0] * gv[0] + a[1] * gv[1]));
    });
    s += detail::cell_edge_integral(ctx, c, [&](int e, int fct, int q, double an) {
      const double vjump = v.edge_bar(c, e, q) - v.edge_value(c, e, q);
      const double wup = an >= 0.0 ? w.edge_value(c, e, q) : w.edge_bar(c, e, q);
      double t = -an * wup * vjump;
      if (an >= 0.0 && mesh.is_boundary_facet(fct))
        t += an * w.edge_bar(c, e, q) * v.edge_bar(c, e, q);
      return t;
    });
    return s;
  });
}

/// Direct quadrature-loop evaluation of the diffusive bilinear form B_D(w, v):
/// sum_K int kappa grad w . grad v
/// + oint_dK (kappa grad w . n + (alpha kappa / h_K)(wbar - w)) (vbar - v)
/// + oint_dK kappa (wbar - w) grad v . n.
inline double direct_B_D(const Context& ctx, const PairEvaluator& w, const PairEvaluator& v) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.kappa > 0.0)) throw std::invalid_argument("direct_B_D: kappa must be > 0");
  const double kappa = spec.kappa;
  return detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
      const auto gw = w.vol_grad(c, q);
      const auto gv = v.vol_grad(c, q);
      return kappa * (gw[0] * gv[0] + gw[1] * gv[1]);
    });
    const double gamma = spec.alpha * kappa / ctx.mesh().h_cell[c];
    for (int e = 0; e < 3; ++e) {
      const auto [fct, orient] = ctx.mesh().cell_facets[c][e];
      (void)orient;
      const double len = ctx.mesh().facet_length(fct);
      const auto n = ctx.mesh().facet_normal(c, e);
      for (int q = 0; q < ctx.edge_rule().size(); ++q) {
        const double ds = ctx.edge_rule().weights[q] * len;
        const double wjump = w.edge_bar(c, e, q) - w.edge_value(c, e, q);
        const double vjump = v.edge_bar(c, e, q) - v.edge_value(c, e, q);
        const auto gw = w.edge_grad(c, e, q);
        const auto gv = v.edge_grad(c, e, q);
        const double dnw = gw[0] * n[0] + gw[1] * n[1];
        const double dnv = gv[0] * n[0] + gv[1] * n[1];
        s += ds * ((kappa * dnw + gamma * wjump) * vjump + kappa * wjump * dnv);
      }
    }
    return s;
  });
}

/// Relative defect of the coercivity identity for divergence-free a:
/// B_A(v,v) = mu ||v||^2 + 1/2 sum_K ||a_n^{1/2}(vbar - v)||^2_dK
///          + 1/2 ||a_n^{1/2} vbar||^2_Gamma.
inline double coercivity_identity_A(const Context& ctx, const PairEvaluator& v) {
  const Mesh& mesh = ctx.mesh();
  const double mu = ctx.spec().mu;
  const double lhs = direct_B_A(ctx, v, v);
  const double rhs = detail::cell_sum(ctx, [&](int c) {
    double s = detail::cell_volume_integral(ctx, c, [&](int q) {
      const double w = v.vol_value(c, q);
      return mu * w * w;
    });
    s += detail::cell_edge_integral(ctx, c, [&](int e, int fct, int q, double an) {
      const double jump = v.edge_bar(c, e, q) - v.edge_value(c, e, q);
      double t = 0.5 * std::abs(an) * jump * jump;
      if (mesh.is_boundary_facet(fct)) {
        const double vb = v.edge_bar(c, e, q);
        t += 0.5 * std::abs(an) * vb * vb;
      }
      return t;
    });
    return s;
  });
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

namespace detail {

/// Scatter helper: dense symmetric accumulation of ds * u_i * u_j over a
/// combined local index set holding (global index, value) pairs.
inline void add_outer(Eigen::MatrixXd& G, const std::vector<std::pair<int, double>>& u,
                      double ds) {
  for (const auto& [gi, vi] : u)
    for (const auto& [gj, vj] : u) G(gi, gj) += ds * vi * vj;
}

}  // namespace detail

/// Dense Gram matrix of the |||.|||_A inner product over (cell dofs, free
/// facet dofs); the geometry in which the inf-sup constant is measured.
inline Eigen::MatrixXd gram_A(const Context& ctx) {
  const Mesh& mesh = ctx.mesh();
  const int nb = ctx.cell_space().nb;
  const int nc = ctx.cell_space().total_dofs;
  const int nf = ctx.facet_space().free_dofs;
  const int nfl = ctx.spec().k + 1;
  const double mu = ctx.spec().mu;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nc + nf, nc + nf);
  std::vector<std::array<double, 2>> gphi(nb);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry& geom = ctx.geometry(c);
    for (int q = 0; q < ctx.volume_rule().size(); ++q) {
      const double w = ctx.volume_rule().weights[q] * geom.detJ;
      const auto a = ctx.advection_at(c, ctx.data_vol(), q);
      for (int i = 0; i < nb; ++i) gphi[i] = geom.push_gradient(ctx.cell_vol().grad(q, i));
      for (int i = 0; i < nb; ++i) {
        const double adg_i = a[0] * gphi[i][0] + a[1] * gphi[i][1];
        for (int j = 0; j < nb; ++j) {
          const double adg_j = a[0] * gphi[j][0] + a[1] * gphi[j][1];
          G(c * nb + i, c * nb + j) +=
              w * (mu * ctx.cell_vol().value(q, i) * ctx.cell_vol().value(q, j) +
                   mesh.h_cell[c] * adg_i * adg_j);
        }
      }
    }
    detail::for_each_edge_qp(ctx, c, [&](int e, int fct, const detail::EdgeQP& qp, int q) {
      const auto a = ctx.advection_at(c, *qp.data, q);
      const double an_abs = std::abs(a[0] * qp.n[0] + a[1] * qp.n[1]);
      std::vector<std::pair<int, double>> jump;
      for (int i = 0; i < nfl; ++i) {
        const int fi = detail::facet_free_dof(ctx, c, e * nfl + i);
        if (fi >= 0) jump.emplace_back(nc + fi, ctx.facet_seg().value(q, i));
      }
      for (int j = 0; j < nb; ++j) jump.emplace_back(c * nb + j, -qp.cell->value(q, j));
      detail::add_outer(G, jump, qp.ds * an_abs);
      if (mesh.is_boundary_facet(fct)) {
        std::vector<std::pair<int, double>> bar;
        for (int i = 0; i < nfl; ++i) {
          const int fi = detail::facet_free_dof(ctx, c, e * nfl + i);
          if (fi >= 0) bar.emplace_back(nc + fi, ctx.facet_seg().value(q, i));
        }
        detail::add_outer(G, bar, qp.ds * an_abs);
      }
    });
  }
  return G;
}

/// Dense Gram matrix of the |||.|||_D inner product over (cell dofs, free
/// facet dofs).
inline Eigen::MatrixXd gram_D(const Context& ctx) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.kappa > 0.0) || !(spec.alpha > 0.0))
    throw std::invalid_argument("gram_D: kappa and alpha must be > 0");
  const Mesh& mesh = ctx.mesh();
  const int nb = ctx.cell_space().nb;
  const int nc = ctx.cell_space().total_dofs;
  const int nf = ctx.facet_space().free_dofs;
  const int nfl = spec.k + 1;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nc + nf, nc + nf);
  std::vector<std::array<double, 2>> gphi(nb);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry& geom = ctx.geometry(c);
    for (int q = 0; q < ctx.volume_rule().size(); ++q) {
      const double w = ctx.volume_rule().weights[q] * geom.detJ;
      for (int i = 0; i < nb; ++i) gphi[i] = geom.push_gradient(ctx.cell_vol().grad(q, i));
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
          G(c * nb + i, c * nb + j) +=
              w * spec.kappa * (gphi[i][0] * gphi[j][0] + gphi[i][1] * gphi[j][1]);
    }
    const double gamma = spec.alpha * spec.kappa / mesh.h_cell[c];
    detail::for_each_edge_qp(ctx, c, [&](int e, int /*fct*/, const detail::EdgeQP& qp, int q) {
      std::vector<std::pair<int, double>> jump;
      for (int i = 0; i < nfl; ++i) {
        const int fi = detail::facet_free_dof(ctx, c, e * nfl + i);
        if (fi >= 0) jump.emplace_back(nc + fi, ctx.facet_seg().value(q, i));
      }
      for (int j = 0; j < nb; ++j) jump.emplace_back(c * nb + j, -qp.cell->value(q, j));
      detail::add_outer(G, jump, qp.ds * gamma);
    });
  }
  return G;
}

/// Numerical inf-sup estimate in the |||.|||_A geometry:
/// beta = sqrt(lambda_min) of (B^T G^{-1} B) x = lambda G x with B the
/// assembled advective operator and G the |||.|||_A Gram matrix. Dense
/// verification probe, capped as in solve_full.
inline InfSupReport infsup_estimate(const Context& ctx) {
  if (ctx.spec().kappa > 0.0)
    throw std::invalid_argument("infsup_estimate: requires kappa = 0 (advective form)");
  if (!(ctx.spec().mu > 0.0))
    throw std::invalid_argument("infsup_estimate: requires mu > 0");
  const BlockSystem sys = assemble_system(ctx);
  const int ndofs = sys.n_cell_dofs() + sys.n_facet_free();
  if (ndofs > 5000) throw std::runtime_error("infsup_estimate: exceeds dense-path size cap");
  const Eigen::MatrixXd A = sys.full_dense();
  const Eigen::MatrixXd G = gram_A(ctx);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("infsup_estimate: degenerate |||.|||_A Gram matrix");
  Eigen::MatrixXd C = A.transpose() * ldlt.solve(A);
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(C, G);
  if (es.info() != Eigen::Success) throw std::runtime_error("infsup_estimate: eigensolve failed");
  InfSupReport rep;
  rep.beta = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
  rep.n_dofs = ndofs;
  return rep;
}

/// Minimum Rayleigh quotient B_D(v,v) / |||v|||_D^2 over the discrete space,
/// via a dense generalized symmetric eigenproblem. Dense verification probe.
inline double coercivity_threshold_D(const Context& ctx) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.kappa > 0.0)) throw std::invalid_argument("coercivity_threshold_D: kappa must be > 0");
  if (!(spec.alpha > 0.0))
    throw std::invalid_argument(
        "coercivity_threshold_D: alpha = 0 leaves the jump term uncontrolled (degenerate norm)");
  const int nb = ctx.cell_space().nb;
  const int nc = ctx.cell_space().total_dofs;
  const int nf = ctx.facet_space().free_dofs;
  if (nc + nf > 5000)
    throw std::runtime_error("coercivity_threshold_D: exceeds dense-path size cap");
  const int nfl = spec.k + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc + nf, nc + nf);
  for (int c = 0; c < ctx.mesh().num_cells(); ++c) {
    const LocalKernelOutput ker = assemble_local_diffusive(ctx, c);
    A.block(c * nb, c * nb, nb, nb) += ker.cc;
    for (int m = 0; m < 3 * nfl; ++m) {
      const int fi = detail::facet_free_dof(ctx, c, m);
      if (fi < 0) continue;
      for (int i = 0; i < nb; ++i) {
        A(c * nb + i, nc + fi) += ker.cf(i, m);
        A(nc + fi, c * nb + i) += ker.fc(m, i);
      }
      for (int n = 0; n < 3 * nfl; ++n) {
        const int fj = detail::facet_free_dof(ctx, c, n);
        if (fj >= 0) A(nc + fi, nc + fj) += ker.ff(m, n);
      }
    }
  }
  const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  const Eigen::MatrixXd G = gram_D(ctx);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("coercivity_threshold_D: degenerate |||.|||_D Gram matrix");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, G);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("coercivity_threshold_D: eigensolve failed");
  return es.eigenvalues().minCoeff();
}

enum class DgRegime { Hyperbolic, Elliptic };

/// l = 0 equivalence check: eliminate the facet unknowns from the coupled
/// operator and compare its action on cell coefficients with an independently
/// assembled classical method — upwind DG (hyperbolic) or the SIP variant
/// with half-weight interior penalty and a gradient-jump penalty (elliptic,
/// uniform mesh). Returns the max relative action difference over 10 random
/// coefficient vectors.
inline double dg_equivalence_l0(const Mesh& mesh_in, int k, DgRegime regime) {
  Mesh mesh = mesh_in;
  ProblemSpec spec;
  spec.k = k;
  spec.l = 0;
  if (regime == DgRegime::Hyperbolic) {
    spec.name = "dg_equiv_hyperbolic";
    spec.mu = 1.0;
    spec.kappa = 0.0;
    spec.alpha = 0.0;
    spec.default_tag = BoundaryTag::Neumann;
    spec.advection = [](Point2) { return std::array<double, 2>{0.8, 0.6}; };
  } else {
    spec.name = "dg_equiv_elliptic";
    spec.mu = 0.0;
    spec.kappa = 1.0;
    spec.alpha = 5.0;
    spec.default_tag = BoundaryTag::Dirichlet;
  }
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const BlockSystem sys = assemble_system(ctx);
  const int nc = sys.n_cell_dofs(), nf = sys.n_facet_free();
  if (nc + nf > 5000) throw std::runtime_error("dg_equivalence_l0: exceeds dense-path size cap");
  const Eigen::MatrixXd A = sys.full_dense();
  const Eigen::MatrixXd Acc = A.topLeftCorner(nc, nc);
  const Eigen::MatrixXd Acf = A.topRightCorner(nc, nf);
  const Eigen::MatrixXd Afc = A.bottomLeftCorner(nf, nc);
  const Eigen::MatrixXd Aff = A.bottomRightCorner(nf, nf);
  const Eigen::MatrixXd M = Acc - Acf * Aff.partialPivLu().solve(Afc);

  // Independent classical assembler.
  const int nb = ctx.cell_space().nb;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nc, nc);
  std::vector<std::array<double, 2>> gphi(nb);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry& geom = ctx.geometry(c);
    for (int q = 0; q < ctx.volume_rule().size(); ++q) {
      const double w = ctx.volume_rule().weights[q] * geom.detJ;
      for (int i = 0; i < nb; ++i) gphi[i] = geom.push_gradient(ctx.cell_vol().grad(q, i));
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          if (regime == DgRegime::Hyperbolic)
            D(c * nb + i, c * nb + j) +=
                w * ctx.cell_vol().value(q, j) *
                (spec.mu * ctx.cell_vol().value(q, i) -
                 (0.8 * gphi[i][0] + 0.6 * gphi[i][1]));
          else
            D(c * nb + i, c * nb + j) +=
                w * spec.kappa * (gphi[i][0] * gphi[j][0] + gphi[i][1] * gphi[j][1]);
        }
    }
  }
  if (regime == DgRegime::Hyperbolic) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
      for (int e = 0; e < 3; ++e) {
        const auto [fct, orient] = mesh.cell_facets[c][e];
        const double len = mesh.facet_length(fct);
        const auto n = mesh.facet_normal(c, e);
        const double an = 0.8 * n[0] + 0.6 * n[1];
        const auto& tab = ctx.cell_edge(e, orient);
        if (an >= 0.0) {
          for (int q = 0; q < ctx.edge_rule().size(); ++q) {
            const double ds = ctx.edge_rule().weights[q] * len;
            for (int i = 0; i < nb; ++i)
              for (int j = 0; j < nb; ++j)
                D(c * nb + i, c * nb + j) += ds * an * tab.value(q, i) * tab.value(q, j);
          }
        } else if (!mesh.is_boundary_facet(fct)) {
          const int c2 = mesh.facet_cells[fct][0] == c ? mesh.facet_cells[fct][1]
                                                       : mesh.facet_cells[fct][0];
          int e2 = -1;
          for (int ee = 0; ee < 3; ++ee)
            if (mesh.cell_facets[c2][ee].first == fct) e2 = ee;
          const auto& tab2 = ctx.cell_edge(e2, mesh.cell_facets[c2][e2].second);
          for (int q = 0; q < ctx.edge_rule().size(); ++q) {
            const double ds = ctx.edge_rule().weights[q] * len;
            for (int i = 0; i < nb; ++i)
              for (int j = 0; j < nb; ++j)
                D(c * nb + i, c2 * nb + j) += ds * an * tab.value(q, i) * tab2.value(q, j);
          }
        }
        // inflow boundary: data term, nothing on the operator
      }
    }
  } else {
    const double kappa = spec.kappa, alpha = spec.alpha;
    std::vector<double> valA(nb), dnA(nb), valB(nb), dnB(nb);
    for (int fct = 0; fct < mesh.num_facets(); ++fct) {
      const int cA = mesh.facet_cells[fct][0];
      int eA = -1;
      for (int ee = 0; ee < 3; ++ee)
        if (mesh.cell_facets[cA][ee].first == fct) eA = ee;
      const auto nA = mesh.facet_normal(cA, eA);
      const auto& tabA = ctx.cell_edge(eA, mesh.cell_facets[cA][eA].second);
      const CellGeometry& geomA = ctx.geometry(cA);
      const double len = mesh.facet_length(fct);
      const double h = mesh.h_cell[cA];
      if (mesh.is_boundary_facet(fct)) {
        for (int q = 0; q < ctx.edge_rule().size(); ++q) {
          const double ds = ctx.edge_rule().weights[q] * len;
          for (int j = 0; j < nb; ++j) {
            valA[j] = tabA.value(q, j);
            const auto g = geomA.push_gradient(tabA.grad(q, j));
            dnA[j] = g[0] * nA[0] + g[1] * nA[1];
          }
          for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
              D(cA * nb + i, cA * nb + j) +=
                  ds * (-kappa * (valA[i] * dnA[j] + dnA[i] * valA[j]) +
                        (alpha * kappa / h) * valA[i] * valA[j]);
        }
        continue;
      }
      const int cB = mesh.facet_cells[fct][1];
      int eB = -1;
      for (int ee = 0; ee < 3; ++ee)
        if (mesh.cell_facets[cB][ee].first == fct) eB = ee;
      const auto nB = mesh.facet_normal(cB, eB);
      const auto& tabB = ctx.cell_edge(eB, mesh.cell_facets[cB][eB].second);
      const CellGeometry& geomB = ctx.geometry(cB);
      for (int q = 0; q < ctx.edge_rule().size(); ++q) {
        const double ds = ctx.edge_rule().weights[q] * len;
        for (int j = 0; j < nb; ++j) {
          valA[j] = tabA.value(q, j);
          auto g = geomA.push_gradient(tabA.grad(q, j));
          dnA[j] = g[0] * nA[0] + g[1] * nA[1];
          valB[j] = tabB.value(q, j);
          g = geomB.push_gradient(tabB.grad(q, j));
          dnB[j] = g[0] * nB[0] + g[1] * nB[1];
        }
        // Combined index s*nb+j: side A then side B. With the facet normal
        // taken as n_A: jump = w_A - w_B, average normal flux
        // {grad w}.n_A = (dnA - (-dnB))/2 ... grad w_B . n_A = -dnB, and the
        // gradient-jump J = dnA + dnB (sum of one-sided outward derivatives).
        auto jump = [&](int s, int j) { return s == 0 ? valA[j] : -valB[j]; };
        auto avg = [&](int s, int j) { return 0.5 * (s == 0 ? dnA[j] : -dnB[j]); };
        auto gjump = [&](int s, int j) { return s == 0 ? dnA[j] : dnB[j]; };
        auto gidx = [&](int s, int j) { return (s == 0 ? cA : cB) * nb + j; };
        for (int si = 0; si < 2; ++si)
          for (int i = 0; i < nb; ++i)
            for (int sj = 0; sj < 2; ++sj)
              for (int j = 0; j < nb; ++j)
                D(gidx(si, i), gidx(sj, j)) +=
                    ds * (-kappa * (jump(si, i) * avg(sj, j) + avg(si, i) * jump(sj, j)) +
                          (alpha * kappa / (2.0 * h)) * jump(si, i) * jump(sj, j) -
                          (kappa * h / (2.0 * alpha)) * gjump(si, i) * gjump(sj, j));
      }
    }
  }

  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double defect = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(nc);
    for (int i = 0; i < nc; ++i) x(i) = unif(rng);
    const Eigen::VectorXd mx = M * x;
    const double d =
        (mx - D * x).lpNorm<Eigen::Infinity>() / std::max(1.0, mx.lpNorm<Eigen::Infinity>());
    defect = std::max(defect, d);
  }
  return defect;
}

/// Maximum over cells of |int_K mu u_h - oint_dK sigma_bar(u_h).n - int_K f|:
/// the local conservation statement of the numerical flux.
inline double local_conservation_check(const Context& ctx, const Field& u, const Field& ubar) {
  const ProblemSpec& spec = ctx.spec();
  const Mesh& mesh = ctx.mesh();
  double worst = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double r = detail::cell_volume_integral(ctx, c, [&](int q) {
      return spec.mu * ctx.cell_value(u, c, ctx.cell_vol(), q) -
             ctx.source_at(c, ctx.data_vol(), q);
    });
    const double gamma = spec.kappa > 0.0 ? spec.alpha * spec.kappa / mesh.h_cell[c] : 0.0;
    detail::for_each_edge_qp(ctx, c, [&](int e, int fct, const detail::EdgeQP& qp, int q) {
      const auto a = ctx.advection_at(c, *qp.data, q);
      const double an = a[0] * qp.n[0] + a[1] * qp.n[1];
      const double uv = ctx.cell_value(u, c, *qp.cell, q);
      const double ub = ctx.facet_value(ubar, fct, q);
      double flux = -an * uv - (eval_zeta(an) * an - gamma) * (ub - uv);
      if (spec.kappa > 0.0) {
        const auto gu = ctx.cell_gradient(u, c, *qp.cell, q);
        flux += spec.kappa * (gu[0] * qp.n[0] + gu[1] * qp.n[1]);
      }
      r -= qp.ds * flux;
    });
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

/// Measured facet-control constant: the smallest C with
/// h_K ||vbar||^2_dK <= C (||vbar - v||^2_dK + ||v||^2_K) on each cell,
/// maximized over cells (per-cell generalized eigenproblem over the local
/// (cell, facet-trace) dofs).
inline double facet_control_constant(const Context& ctx) {
  const Mesh& mesh = ctx.mesh();
  const int nb = ctx.cell_space().nb;
  const int nfl = ctx.spec().k + 1;
  const int nloc = nb + 3 * nfl;
  double worst = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(nloc, nloc);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nloc, nloc);
    const CellGeometry& geom = ctx.geometry(c);
    for (int q = 0; q < ctx.volume_rule().size(); ++q) {
      const double w = ctx.volume_rule().weights[q] * geom.detJ;
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
          G(i, j) += w * ctx.cell_vol().value(q, i) * ctx.cell_vol().value(q, j);
    }
    detail::for_each_edge_qp(ctx, c, [&](int e, int /*fct*/, const detail::EdgeQP& qp, int q) {
      std::vector<double> bar(nloc, 0.0), jump(nloc, 0.0);
      for (int i = 0; i < nfl; ++i) {
        bar[nb + e * nfl + i] = ctx.facet_seg().value(q, i);
        jump[nb + e * nfl + i] = ctx.facet_seg().value(q, i);
      }
      for (int j = 0; j < nb; ++j) jump[j] = -qp.cell->value(q, j);
      for (int i = 0; i < nloc; ++i)
        for (int j = 0; j < nloc; ++j) {
          N(i, j) += qp.ds * mesh.h_cell[c] * bar[i] * bar[j];
          G(i, j) += qp.ds * jump[i] * jump[j];
        }
    });
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(N, G);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("facet_control_constant: eigensolve failed");
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return worst;
}

}  // namespace istab
