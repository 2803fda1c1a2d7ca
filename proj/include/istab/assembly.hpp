#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "istab/parallel.hpp"
#include "istab/problem.hpp"
#include "istab/space.hpp"

namespace istab {

/// Everything precomputed for one (mesh, spec) pair: spaces, quadrature,
/// basis tabulations at volume and edge quadrature points, per-cell affine
/// maps, and the order-(k+6) interpolants of the problem data (a, f and the
/// exact solution). All quadrature anywhere in the artifact runs through the
/// single rule held here, of degree 2k+14, which integrates every term that
/// appears (including errors against the k+6 interpolant) exactly.
class Context {
 public:
  Context(const Mesh& mesh, const ProblemSpec& spec)
      : mesh_(&mesh),
        spec_(spec),
        cell_basis_(RefEntity::Triangle, spec.k),
        facet_basis_(RefEntity::Segment, spec.k),
        data_basis_(RefEntity::Triangle, spec.data_order()) {
    spec.validate();
    cs_ = build_cell_space(mesh, spec.k);
    fs_ = build_facet_space(mesh, spec.k, spec.l);
    data_cs_ = build_cell_space(mesh, spec.data_order());

    const int qdeg = 2 * spec.k + 14;
    tri_q_ = triangle_quadrature(qdeg);
    seg_q_ = segment_quadrature(qdeg);

    cell_vol_ = cell_basis_.tabulate(tri_q_.points, true);
    data_vol_ = data_basis_.tabulate(tri_q_.points, true);
    facet_seg_ = facet_basis_.tabulate(seg_q_.points);
    for (int e = 0; e < 3; ++e)
      for (int o = 0; o < 2; ++o) {
        std::vector<std::array<double, 2>> pts;
        pts.reserve(seg_q_.size());
        for (int q = 0; q < seg_q_.size(); ++q) {
          const double s = seg_q_.points[q][0];
          pts.push_back(edge_reference_point(e, o == 0 ? s : 1.0 - s));
        }
        cell_edge_[e][o] = cell_basis_.tabulate(pts);
        data_edge_[e][o] = data_basis_.tabulate(pts);
      }

    geom_.reserve(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) geom_.push_back(cell_geometry(mesh, c));

    const int m = spec.data_order();
    if (spec.advection) {
      ax_ = interpolate_cellwise([&](Point2 p) { return spec.advection(p)[0]; }, mesh, m);
      ay_ = interpolate_cellwise([&](Point2 p) { return spec.advection(p)[1]; }, mesh, m);
    }
    if (spec.source) f_ = interpolate_cellwise(spec.source, mesh, m);
    if (spec.exact) u_ = interpolate_cellwise(spec.exact, mesh, m);
  }

  const Mesh& mesh() const { return *mesh_; }
  const ProblemSpec& spec() const { return spec_; }
  const CellSpace& cell_space() const { return cs_; }
  const FacetSpace& facet_space() const { return fs_; }
  const CellSpace& data_space() const { return data_cs_; }
  const QuadratureRule& volume_rule() const { return tri_q_; }
  const QuadratureRule& edge_rule() const { return seg_q_; }
  const CellGeometry& geometry(int c) const { return geom_[c]; }
  const LagrangeBasis& cell_basis() const { return cell_basis_; }
  const LagrangeBasis& facet_basis() const { return facet_basis_; }
  const LagrangeBasis& data_basis() const { return data_basis_; }
  const BasisTabulation& cell_vol() const { return cell_vol_; }
  const BasisTabulation& data_vol() const { return data_vol_; }
  const BasisTabulation& cell_edge(int e, int orient) const {
    return cell_edge_[e][orient > 0 ? 0 : 1];
  }
  const BasisTabulation& data_edge(int e, int orient) const {
    return data_edge_[e][orient > 0 ? 0 : 1];
  }
  const BasisTabulation& facet_seg() const { return facet_seg_; }
  bool has_advection() const { return !ax_.coeffs.empty(); }
  bool has_exact() const { return !u_.coeffs.empty(); }
  const Field& data_u() const { return u_; }
  const Field& data_ax() const { return ax_; }
  const Field& data_ay() const { return ay_; }

  /// Interpolated advection field at an arbitrary reference point of cell c.
  std::array<double, 2> advection_at_point(int c, std::array<double, 2> ref) const {
    if (!has_advection()) return {0.0, 0.0};
    std::vector<double> val(data_basis_.dim());
    data_basis_.eval(ref, val.data());
    double ax = 0.0, ay = 0.0;
    for (int i = 0; i < data_basis_.dim(); ++i) {
      ax += val[i] * ax_.coeffs[data_cs_.dof(c, i)];
      ay += val[i] * ay_.coeffs[data_cs_.dof(c, i)];
    }
    return {ax, ay};
  }

  // Interpolated-data evaluation at tabulated points.
  double data_value(const Field& field, int c, const BasisTabulation& tab, int q) const {
    double v = 0.0;
    for (int i = 0; i < tab.dim; ++i) v += field.coeffs[data_cs_.dof(c, i)] * tab.value(q, i);
    return v;
  }
  std::array<double, 2> data_gradient(const Field& field, int c, const BasisTabulation& tab,
                                      int q) const {
    std::array<double, 2> g = {0.0, 0.0};
    for (int i = 0; i < tab.dim; ++i) {
      const double ci = field.coeffs[data_cs_.dof(c, i)];
      g[0] += ci * tab.grad(q, i)[0];
      g[1] += ci * tab.grad(q, i)[1];
    }
    return geom_[c].push_gradient(g);
  }
  std::array<double, 2> advection_at(int c, const BasisTabulation& tab, int q) const {
    if (!has_advection()) return {0.0, 0.0};
    return {data_value(ax_, c, tab, q), data_value(ay_, c, tab, q)};
  }
  double source_at(int c, const BasisTabulation& tab, int q) const {
    return f_.coeffs.empty() ? 0.0 : data_value(f_, c, tab, q);
  }
  double exact_at(int c, const BasisTabulation& tab, int q) const {
    return data_value(u_, c, tab, q);
  }

  // Discrete-field evaluation.
  double cell_value(const Field& field, int c, const BasisTabulation& tab, int q) const {
    double v = 0.0;
    for (int i = 0; i < tab.dim; ++i) v += field.coeffs[cs_.dof(c, i)] * tab.value(q, i);
    return v;
  }
  std::array<double, 2> cell_gradient(const Field& field, int c, const BasisTabulation& tab,
                                      int q) const {
    std::array<double, 2> g = {0.0, 0.0};
    for (int i = 0; i < tab.dim; ++i) {
      const double ci = field.coeffs[cs_.dof(c, i)];
      g[0] += ci * tab.grad(q, i)[0];
      g[1] += ci * tab.grad(q, i)[1];
    }
    return geom_[c].push_gradient(g);
  }
  double facet_value(const Field& field, int f, int q) const {
    double v = 0.0;
    for (int i = 0; i <= spec_.k; ++i) v += field.coeffs[fs_.dof(f, i)] * facet_seg_.value(q, i);
    return v;
  }

 private:
  const Mesh* mesh_;
  ProblemSpec spec_;
  LagrangeBasis cell_basis_, facet_basis_, data_basis_;
  CellSpace cs_, data_cs_;
  FacetSpace fs_;
  QuadratureRule tri_q_, seg_q_;
  BasisTabulation cell_vol_, data_vol_, facet_seg_;
  BasisTabulation cell_edge_[3][2], data_edge_[3][2];
  std::vector<CellGeometry> geom_;
  Field ax_, ay_, f_, u_;
};

/// Dense local matrices for one cell and its three facets. Facet-trace dofs
/// are indexed locally as e*(k+1)+i; blocks are (test, trial).
struct LocalKernelOutput {
  Eigen::MatrixXd cc, cf, fc, ff;
  Eigen::VectorXd c, f;

  LocalKernelOutput() = default;
  LocalKernelOutput(int nb, int nf) {
    cc = Eigen::MatrixXd::Zero(nb, nb);
    cf = Eigen::MatrixXd::Zero(nb, nf);
    fc = Eigen::MatrixXd::Zero(nf, nb);
    ff = Eigen::MatrixXd::Zero(nf, nf);
    c = Eigen::VectorXd::Zero(nb);
    f = Eigen::VectorXd::Zero(nf);
  }

  LocalKernelOutput& operator+=(const LocalKernelOutput& o) {
    cc += o.cc;
    cf += o.cf;
    fc += o.fc;
    ff += o.ff;
    c += o.c;
    f += o.f;
    return *this;
  }
};

namespace detail {

struct EdgeQP {
  double ds;                     // physical weight
  std::array<double, 2> n;       // outward unit normal
  const BasisTabulation* cell;   // cell basis at this edge's points
  const BasisTabulation* data;   // data basis at this edge's points
};

template <typename F>
void for_each_edge_qp(const Context& ctx, int c, F&& body) {
  const Mesh& mesh = ctx.mesh();
  for (int e = 0; e < 3; ++e) {
    const auto [fct, orient] = mesh.cell_facets[c][e];
    const double len = mesh.facet_length(fct);
    EdgeQP qp;
    qp.n = mesh.facet_normal(c, e);
    qp.cell = &ctx.cell_edge(e, orient);
    qp.data = &ctx.data_edge(e, orient);
    for (int q = 0; q < ctx.edge_rule().size(); ++q) {
      qp.ds = ctx.edge_rule().weights[q] * len;
      body(e, fct, qp, q);
    }
  }
}

}  // namespace detail

/// Advective (and reaction) part of the bilinear form plus its boundary term.
inline LocalKernelOutput assemble_local_advective(const Context& ctx, int c) {
  const ProblemSpec& spec = ctx.spec();
  const int nb = ctx.cell_space().nb;
  const int nfl = spec.k + 1;
  LocalKernelOutput out(nb, 3 * nfl);
  const CellGeometry& geom = ctx.geometry(c);

  // mass term and -int_K a w . grad v
  std::vector<std::array<double, 2>> gphi(nb);
  for (int q = 0; q < ctx.volume_rule().size(); ++q) {
    const double w = ctx.volume_rule().weights[q] * geom.detJ;
    const auto& tab = ctx.cell_vol();
    const auto a = ctx.advection_at(c, ctx.data_vol(), q);
    for (int i = 0; i < nb; ++i) gphi[i] = geom.push_gradient(tab.grad(q, i));
    for (int i = 0; i < nb; ++i) {
      const double adg_i = a[0] * gphi[i][0] + a[1] * gphi[i][1];
      for (int j = 0; j < nb; ++j)
        out.cc(i, j) += w * (spec.mu * tab.value(q, i) - adg_i) * tab.value(q, j);
    }
  }

  if (!ctx.has_advection()) return out;
  const Mesh& mesh = ctx.mesh();
  detail::for_each_edge_qp(ctx, c, [&](int e, int fct, const detail::EdgeQP& qp, int q) {
    const auto a = ctx.advection_at(c, *qp.data, q);
    const double an = a[0] * qp.n[0] + a[1] * qp.n[1];
    const int off = e * nfl;
    const auto& fb = ctx.facet_seg();
    if (an >= 0.0) {
      // outflow: -int a.n w (vbar - v)
      for (int i = 0; i < nfl; ++i)
        for (int j = 0; j < nb; ++j)
          out.fc(off + i, j) -= qp.ds * an * fb.value(q, i) * qp.cell->value(q, j);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
          out.cc(i, j) += qp.ds * an * qp.cell->value(q, i) * qp.cell->value(q, j);
      if (mesh.is_boundary_facet(fct))
        for (int i = 0; i < nfl; ++i)
          for (int j = 0; j < nfl; ++j)
            out.ff(off + i, off + j) += qp.ds * an * fb.value(q, i) * fb.value(q, j);
    } else {
      // inflow: -int a.n wbar (vbar - v)
      for (int i = 0; i < nfl; ++i)
        for (int j = 0; j < nfl; ++j)
          out.ff(off + i, off + j) -= qp.ds * an * fb.value(q, i) * fb.value(q, j);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nfl; ++j)
          out.cf(i, off + j) += qp.ds * an * qp.cell->value(q, i) * fb.value(q, j);
    }
  });
  return out;
}

/// Diffusive part: volume gradient term, penalized flux and symmetrizing term.
inline LocalKernelOutput assemble_local_diffusive(const Context& ctx, int c) {
  const ProblemSpec& spec = ctx.spec();
  if (!(spec.kappa > 0.0))
    throw std::invalid_argument("assemble_local_diffusive: kappa must be > 0");
  const int nb = ctx.cell_space().nb;
  const int nfl = spec.k + 1;
  LocalKernelOutput out(nb, 3 * nfl);
  const CellGeometry& geom = ctx.geometry(c);
  const double kappa = spec.kappa;
  const double gamma = spec.alpha * kappa / ctx.mesh().h_cell[c];

  std::vector<std::array<double, 2>> gphi(nb);
  for (int q = 0; q < ctx.volume_rule().size(); ++q) {
    const double w = ctx.volume_rule().weights[q] * geom.detJ;
    for (int i = 0; i < nb; ++i) gphi[i] = geom.push_gradient(ctx.cell_vol().grad(q, i));
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        out.cc(i, j) += w * kappa * (gphi[i][0] * gphi[j][0] + gphi[i][1] * gphi[j][1]);
  }

  std::vector<double> dn(nb);
  detail::for_each_edge_qp(ctx, c, [&](int e, int /*fct*/, const detail::EdgeQP& qp, int q) {
    const int off = e * nfl;
    const auto& fb = ctx.facet_seg();
    for (int j = 0; j < nb; ++j) {
      const auto g = geom.push_gradient(qp.cell->grad(q, j));
      dn[j] = g[0] * qp.n[0] + g[1] * qp.n[1];
    }
    // int (kappa grad w . n) (vbar - v) and the symmetrizing transpose
    for (int i = 0; i < nfl; ++i)
      for (int j = 0; j < nb; ++j)
        out.fc(off + i, j) += qp.ds * kappa * fb.value(q, i) * dn[j];
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        out.cc(i, j) -= qp.ds * kappa * (qp.cell->value(q, i) * dn[j] + dn[i] * qp.cell->value(q, j));
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nfl; ++j)
        out.cf(i, off + j) += qp.ds * kappa * dn[i] * fb.value(q, j);
    // penalty (alpha kappa / h_K)(wbar - w)(vbar - v)
    for (int i = 0; i < nfl; ++i)
      for (int j = 0; j < nfl; ++j)
        out.ff(off + i, off + j) += qp.ds * gamma * fb.value(q, i) * fb.value(q, j);
    for (int i = 0; i < nfl; ++i)
      for (int j = 0; j < nb; ++j)
        out.fc(off + i, j) -= qp.ds * gamma * fb.value(q, i) * qp.cell->value(q, j);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nfl; ++j)
        out.cf(i, off + j) -= qp.ds * gamma * qp.cell->value(q, i) * fb.value(q, j);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        out.cc(i, j) += qp.ds * gamma * qp.cell->value(q, i) * qp.cell->value(q, j);
  });
  return out;
}

/// Load: int_K f v plus int_{Gamma_N} g vbar with g = -zeta u a.n + kappa
/// grad u . n evaluated from the k+6 interpolants of the exact solution.
inline LocalKernelOutput assemble_load(const Context& ctx, int c) {
  const ProblemSpec& spec = ctx.spec();
  const int nb = ctx.cell_space().nb;
  const int nfl = spec.k + 1;
  LocalKernelOutput out(nb, 3 * nfl);
  const CellGeometry& geom = ctx.geometry(c);

  for (int q = 0; q < ctx.volume_rule().size(); ++q) {
    const double w = ctx.volume_rule().weights[q] * geom.detJ;
    const double fval = ctx.source_at(c, ctx.data_vol(), q);
    for (int i = 0; i < nb; ++i) out.c(i) += w * fval * ctx.cell_vol().value(q, i);
  }

  if (!ctx.has_exact()) return out;
  const Mesh& mesh = ctx.mesh();
  detail::for_each_edge_qp(ctx, c, [&](int e, int fct, const detail::EdgeQP& qp, int q) {
    if (!mesh.is_boundary_facet(fct) || mesh.facet_tag[fct] != BoundaryTag::Neumann) return;
    const auto a = ctx.advection_at(c, *qp.data, q);
    const double an = a[0] * qp.n[0] + a[1] * qp.n[1];
    const double uval = ctx.exact_at(c, *qp.data, q);
    double g = -eval_zeta(an) * uval * an;
    if (spec.kappa > 0.0) {
      const auto gu = ctx.data_gradient(ctx.data_u(), c, *qp.data, q);
      g += spec.kappa * (gu[0] * qp.n[0] + gu[1] * qp.n[1]);
    }
    const int off = e * nfl;
    for (int i = 0; i < nfl; ++i) out.f(off + i) += qp.ds * g * ctx.facet_seg().value(q, i);
  });
  return out;
}

/// The coupled (cell, facet) system, stored cell-locally: the cell-cell block
/// is block-diagonal by construction, which is what static condensation rests
/// on. Facet dofs in local blocks use the pre-elimination numbering; Dirichlet
/// dofs are dropped when scattering to global objects.
struct BlockSystem {
  const Context* ctx = nullptr;
  std::vector<LocalKernelOutput> local;
  Eigen::VectorXd bc;  // all cell dofs
  Eigen::VectorXd bf;  // free facet dofs

  int n_cell_dofs() const { return ctx->cell_space().total_dofs; }
  int n_facet_free() const { return ctx->facet_space().free_dofs; }

  /// Free-dof index of local facet-trace dof m = e*(k+1)+i of cell c (-1 if
  /// constrained).
  int facet_free_dof(int c, int m) const {
    const FacetSpace& fs = ctx->facet_space();
    const int nfl = fs.k + 1;
    const int fct = ctx->mesh().cell_facets[c][m / nfl].first;
    return fs.free_index[fs.dof(fct, m % nfl)];
  }

  Eigen::SparseMatrix<double> coupling_cf() const {
    std::vector<Eigen::Triplet<double>> trip;
    const int nb = ctx->cell_space().nb;
    for (int c = 0; c < ctx->mesh().num_cells(); ++c)
      for (int i = 0; i < nb; ++i)
        for (int m = 0; m < local[c].cf.cols(); ++m) {
          const int fj = facet_free_dof(c, m);
          if (fj >= 0) trip.emplace_back(c * nb + i, fj, local[c].cf(i, m));
        }
    Eigen::SparseMatrix<double> A(n_cell_dofs(), n_facet_free());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  Eigen::SparseMatrix<double> coupling_fc() const {
    std::vector<Eigen::Triplet<double>> trip;
    const int nb = ctx->cell_space().nb;
    for (int c = 0; c < ctx->mesh().num_cells(); ++c)
      for (int m = 0; m < local[c].fc.rows(); ++m) {
        const int fi = facet_free_dof(c, m);
        if (fi < 0) continue;
        for (int j = 0; j < nb; ++j) trip.emplace_back(fi, c * nb + j, local[c].fc(m, j));
      }
    Eigen::SparseMatrix<double> A(n_facet_free(), n_cell_dofs());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  Eigen::SparseMatrix<double> facet_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < ctx->mesh().num_cells(); ++c)
      for (int m = 0; m < local[c].ff.rows(); ++m) {
        const int fi = facet_free_dof(c, m);
        if (fi < 0) continue;
        for (int n = 0; n < local[c].ff.cols(); ++n) {
          const int fj = facet_free_dof(c, n);
          if (fj >= 0) trip.emplace_back(fi, fj, local[c].ff(m, n));
        }
      }
    Eigen::SparseMatrix<double> A(n_facet_free(), n_facet_free());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  /// Dense full coupled matrix [Acc Acf; Afc Aff] over cell + free facet dofs.
  Eigen::MatrixXd full_dense() const {
    const int nc = n_cell_dofs(), nf = n_facet_free(), nb = ctx->cell_space().nb;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc + nf, nc + nf);
    for (int c = 0; c < ctx->mesh().num_cells(); ++c) {
      A.block(c * nb, c * nb, nb, nb) = local[c].cc;
      for (int m = 0; m < local[c].ff.rows(); ++m) {
        const int fi = facet_free_dof(c, m);
        for (int i = 0; i < nb; ++i) {
          if (fi >= 0) {
            A(c * nb + i, nc + fi) += local[c].cf(i, m);
            A(nc + fi, c * nb + i) += local[c].fc(m, i);
          }
        }
        if (fi < 0) continue;
        for (int n = 0; n < local[c].ff.cols(); ++n) {
          const int fj = facet_free_dof(c, n);
          if (fj >= 0) A(nc + fi, nc + fj) += local[c].ff(m, n);
        }
      }
    }
    return A;
  }
};

/// Assemble all local kernels and the global load. Local kernels are pure and
/// computed in parallel per cell; the global scatter runs in cell-major order
/// so the result is deterministic.
inline BlockSystem assemble_system(const Context& ctx) {
  BlockSystem sys;
  sys.ctx = &ctx;
  const int ncells = ctx.mesh().num_cells();
  const int nb = ctx.cell_space().nb;
  sys.local.resize(ncells);
  sys.bc = Eigen::VectorXd::Zero(ctx.cell_space().total_dofs);
  sys.bf = Eigen::VectorXd::Zero(ctx.facet_space().free_dofs);
  parallel_for(ncells, [&](int c) {
    LocalKernelOutput ker = assemble_local_advective(ctx, c);
    if (ctx.spec().kappa > 0.0) ker += assemble_local_diffusive(ctx, c);
    ker += assemble_load(ctx, c);
    sys.local[c] = std::move(ker);
  });
  for (int c = 0; c < ncells; ++c) {
    const LocalKernelOutput& ker = sys.local[c];
    sys.bc.segment(c * nb, nb) += ker.c;
    for (int m = 0; m < ker.f.size(); ++m) {
      const FacetSpace& fs = ctx.facet_space();
      const int nfl = fs.k + 1;
      const int fct = ctx.mesh().cell_facets[c][m / nfl].first;
      const int fi = fs.free_index[fs.dof(fct, m % nfl)];
      if (fi >= 0) sys.bf(fi) += ker.f(m);
    }
  }
  return sys;
}

/// sigma_bar(u) . n on local facet e of cell c at facet parameter t in [0,1]
/// (parameter of the stored facet direction), seen from the cell's side.
inline double numerical_flux_dot_n(const Context& ctx, const Field& u, const Field& ubar, int c,
                                   int e, double t) {
  const Mesh& mesh = ctx.mesh();
  const auto [fct, orient] = mesh.cell_facets[c][e];
  const auto n = mesh.facet_normal(c, e);
  const double tc = orient > 0 ? t : 1.0 - t;
  const auto ref = edge_reference_point(e, tc);
  const CellGeometry& geom = ctx.geometry(c);

  const int nb = ctx.cell_space().nb;
  std::vector<double> val(nb);
  std::vector<std::array<double, 2>> gref(nb);
  ctx.cell_basis().eval(ref, val.data(), gref.data());
  double uv = 0.0;
  std::array<double, 2> gu = {0.0, 0.0};
  for (int i = 0; i < nb; ++i) {
    const double ci = u.coeffs[ctx.cell_space().dof(c, i)];
    uv += ci * val[i];
    gu[0] += ci * gref[i][0];
    gu[1] += ci * gref[i][1];
  }
  gu = geom.push_gradient(gu);

  std::vector<double> fval(ctx.spec().k + 1);
  ctx.facet_basis().eval({t, 0.0}, fval.data());
  double ub = 0.0;
  for (int i = 0; i <= ctx.spec().k; ++i) ub += ubar.coeffs[ctx.facet_space().dof(fct, i)] * fval[i];

  const auto a = ctx.advection_at_point(c, ref);
  const double an = a[0] * n[0] + a[1] * n[1];
  const double kappa = ctx.spec().kappa;
  const double pen = kappa > 0.0 ? ctx.spec().alpha * kappa / mesh.h_cell[c] : 0.0;
  return -an * uv + kappa * (gu[0] * n[0] + gu[1] * n[1]) -
         (eval_zeta(an) * an - pen) * (ub - uv);
}

/// Point-based wrapper: validates that the physical point lies on the facet
/// and maps it to the facet parameter.
inline double eval_numerical_flux(const Context& ctx, const Field& u, const Field& ubar, int c,
                                  int facet, Point2 p) {
  const Mesh& mesh = ctx.mesh();
  int e = -1;
  for (int ee = 0; ee < 3; ++ee)
    if (mesh.cell_facets[c][ee].first == facet) e = ee;
  if (e < 0) throw std::invalid_argument("eval_numerical_flux: facet not on cell");
  const Point2 a = mesh.vertices[mesh.facets[facet][0]];
  const Point2 b = mesh.vertices[mesh.facets[facet][1]];
  const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
  const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2;
  const Point2 proj = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
  if (t < -1e-12 || t > 1.0 + 1e-12 || std::hypot(p.x - proj.x, p.y - proj.y) > 1e-10)
    throw std::invalid_argument("eval_numerical_flux: point not on facet");
  return numerical_flux_dot_n(ctx, u, ubar, c, e, t);
}

}  // namespace istab
