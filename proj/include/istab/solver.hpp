#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "istab/assembly.hpp"

namespace istab {

struct SolverStats {
  double condensed_residual = 0.0;  // ||S x - rhs|| / max(1, ||rhs||)
  double max_pivot_ratio = 0.0;     // worst local A_cc pivot ratio
};

/// Schur complement of the coupled system on the free facet dofs, with the
/// per-cell factorizations retained for element-wise recovery of u_h.
struct CondensedSystem {
  const BlockSystem* sys = nullptr;
  Eigen::SparseMatrix<double> S;
  Eigen::VectorXd rhs;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> cell_lu;
  double max_pivot_ratio = 0.0;
};

struct Solution {
  Field u;      // cell space coefficients
  Field ubar;   // full facet numbering; Dirichlet entries are 0
  SolverStats stats;
};

/// Cell-by-cell elimination of the cell unknowns: each cell contributes a
/// dense local Schur update touching only its three facets' dofs.
inline CondensedSystem static_condense(const BlockSystem& sys) {
  const Context& ctx = *sys.ctx;
  CondensedSystem cs;
  cs.sys = &sys;
  const int nf = sys.n_facet_free();
  cs.rhs = sys.bf;
  std::vector<Eigen::Triplet<double>> trip;
  const int ncells = ctx.mesh().num_cells();
  cs.cell_lu.reserve(ncells);
  for (int c = 0; c < ncells; ++c) {
    const LocalKernelOutput& loc = sys.local[c];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(loc.cc);
    const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = diag.maxCoeff(), dmin = diag.minCoeff();
    if (!(dmin > 0.0) || !std::isfinite(dmax / dmin))
      throw std::runtime_error("static_condense: singular cell block in cell " + std::to_string(c));
    const double ratio = dmax / dmin;
    if (ratio > cs.max_pivot_ratio) cs.max_pivot_ratio = ratio;
    if (ratio > 1e12)
      std::cerr << "static_condense: warning, cell " << c << " pivot ratio " << ratio << "\n";

    const Eigen::MatrixXd X = lu.solve(loc.cf);           // Acc^{-1} Acf
    const Eigen::MatrixXd Sk = loc.ff - loc.fc * X;       // local Schur block
    const Eigen::VectorXd yk = lu.solve(sys.bc.segment(c * ctx.cell_space().nb, ctx.cell_space().nb));
    const Eigen::VectorXd rk = loc.fc * yk;
    for (int m = 0; m < Sk.rows(); ++m) {
      const int fi = sys.facet_free_dof(c, m);
      if (fi < 0) continue;
      cs.rhs(fi) -= rk(m);
      for (int n = 0; n < Sk.cols(); ++n) {
        const int fj = sys.facet_free_dof(c, n);
        if (fj >= 0) trip.emplace_back(fi, fj, Sk(m, n));
      }
    }
    cs.cell_lu.push_back(std::move(lu));
  }
  cs.S.resize(nf, nf);
  cs.S.setFromTriplets(trip.begin(), trip.end());
  cs.S.makeCompressed();
  return cs;
}

/// Direct sparse solve of the condensed (generally nonsymmetric) system.
inline Eigen::VectorXd solve_condensed(const CondensedSystem& cs, SolverStats* stats = nullptr) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(cs.S);
  lu.factorize(cs.S);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_condensed: factorization failed (singular condensed system)");
  // A numerically singular factorization can still "solve" a zero rhs; probe
  // with a fixed nontrivial vector and check the residual.
  if (cs.S.rows() > 0) {
    Eigen::VectorXd probe(cs.S.rows());
    for (int i = 0; i < probe.size(); ++i) probe(i) = std::sin(i + 1.0);
    const Eigen::VectorXd y = lu.solve(probe);
    if (!y.allFinite() || (cs.S * y - probe).norm() > 1e-6 * probe.norm())
      throw std::runtime_error("solve_condensed: condensed system is numerically singular");
  }
  const Eigen::VectorXd x = lu.solve(cs.rhs);
  const double denom = std::max(1.0, cs.rhs.norm());
  const double res = (cs.S * x - cs.rhs).norm() / denom;
  if (stats) {
    stats->condensed_residual = res;
    stats->max_pivot_ratio = cs.max_pivot_ratio;
  }
  return x;
}

/// Expand a free-dof facet vector into the full facet numbering.
inline Field expand_facet_vector(const FacetSpace& fs, const Eigen::VectorXd& x) {
  Field f;
  f.coeffs.assign(fs.total_dofs, 0.0);
  for (int d = 0; d < fs.total_dofs; ++d)
    if (fs.free_index[d] >= 0) f.coeffs[d] = x(fs.free_index[d]);
  return f;
}

/// Element-wise recovery: u_K = Acc_K^{-1} (bc_K - Acf_K ubar_K).
inline Field recover_cell_solution(const CondensedSystem& cs, const Field& ubar) {
  const BlockSystem& sys = *cs.sys;
  const Context& ctx = *sys.ctx;
  const int nb = ctx.cell_space().nb;
  const FacetSpace& fs = ctx.facet_space();
  const int nfl = fs.k + 1;
  Field u;
  u.coeffs.resize(ctx.cell_space().total_dofs);
  Eigen::VectorXd ubar_loc(3 * nfl);
  for (int c = 0; c < ctx.mesh().num_cells(); ++c) {
    for (int e = 0; e < 3; ++e) {
      const int fct = ctx.mesh().cell_facets[c][e].first;
      for (int i = 0; i < nfl; ++i) ubar_loc(e * nfl + i) = ubar.coeffs[fs.dof(fct, i)];
    }
    const Eigen::VectorXd rhs = sys.bc.segment(c * nb, nb) - sys.local[c].cf * ubar_loc;
    const Eigen::VectorXd uc = cs.cell_lu[c].solve(rhs);
    for (int i = 0; i < nb; ++i) u.coeffs[c * nb + i] = uc(i);
  }
  return u;
}

/// Condense, solve, recover.
inline Solution solve(const BlockSystem& sys) {
  const CondensedSystem cs = static_condense(sys);
  Solution sol;
  const Eigen::VectorXd x = solve_condensed(cs, &sol.stats);
  sol.ubar = expand_facet_vector(sys.ctx->facet_space(), x);
  sol.u = recover_cell_solution(cs, sol.ubar);
  return sol;
}

/// Dense factorization of the full coupled matrix; verification oracle only.
inline Solution solve_full(const BlockSystem& sys) {
  const Context& ctx = *sys.ctx;
  const int nc = sys.n_cell_dofs(), nf = sys.n_facet_free();
  if (nc + nf > 5000)
    throw std::runtime_error("solve_full: system exceeds the dense-path size cap");
  const Eigen::MatrixXd A = sys.full_dense();
  Eigen::VectorXd b(nc + nf);
  b << sys.bc, sys.bf;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw std::runtime_error("solve_full: singular full system");
  const Eigen::VectorXd x = lu.solve(b);
  Solution sol;
  sol.u.coeffs.assign(x.data(), x.data() + nc);
  sol.ubar = expand_facet_vector(ctx.facet_space(), x.tail(nf));
  sol.stats.condensed_residual = (A * x - b).norm() / std::max(1.0, b.norm());
  return sol;
}

}  // namespace istab
