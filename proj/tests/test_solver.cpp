#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "istab/assembly.hpp"
#include "istab/solver.hpp"

using namespace istab;

namespace {

ProblemSpec hyperbolic_with_data(int k) {
  ProblemSpec s = preset_hyperbolic_bey(k);
  return s;
}

Eigen::VectorXd full_vector(const Context& ctx, const Solution& sol) {
  const int nc = ctx.cell_space().total_dofs;
  Eigen::VectorXd x(nc + ctx.facet_space().free_dofs);
  for (int i = 0; i < nc; ++i) x(i) = sol.u.coeffs[i];
  for (int d = 0; d < ctx.facet_space().total_dofs; ++d)
    if (ctx.facet_space().free_index[d] >= 0)
      x(nc + ctx.facet_space().free_index[d]) = sol.ubar.coeffs[d];
  return x;
}

}  // namespace

TEST(Solver, SingleTriangleCondensationEqualsFullSolve) {
  Poly2 u;
  u.c = {{0.5, -0.2}, {0.3}};  // 0.5 - 0.2 y + 0.3 x
  ProblemSpec spec = preset_custom_poly(1, 1, 1.0, 0.0, 0.0, {0.8, 0.6}, u);
  Mesh mesh = build_single_triangle_mesh({0, 0}, {1, 0}, {0, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const BlockSystem sys = assemble_system(ctx);
  const Solution cond = solve(sys);
  const Solution full = solve_full(sys);
  for (std::size_t i = 0; i < cond.ubar.coeffs.size(); ++i)
    EXPECT_NEAR(cond.ubar.coeffs[i], full.ubar.coeffs[i], 1e-13);
  for (std::size_t i = 0; i < cond.u.coeffs.size(); ++i)
    EXPECT_NEAR(cond.u.coeffs[i], full.u.coeffs[i], 1e-13);
}

TEST(Solver, CondensedMatchesDenseOracleOnPresets) {
  for (int variant = 0; variant < 2; ++variant) {
    ProblemSpec spec =
        variant == 0 ? hyperbolic_with_data(1) : preset_elliptic_sine(1, 5.0);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    apply_boundary_tags(mesh, spec);
    const Context ctx(mesh, spec);
    const BlockSystem sys = assemble_system(ctx);
    const Solution cond = solve(sys);
    const Solution full = solve_full(sys);
    double scale = 0.0;
    for (double v : full.ubar.coeffs) scale = std::max(scale, std::abs(v));
    ASSERT_GT(scale, 0.0);
    for (std::size_t i = 0; i < cond.ubar.coeffs.size(); ++i)
      EXPECT_NEAR(cond.ubar.coeffs[i], full.ubar.coeffs[i], 1e-11 * scale);
  }
}

TEST(Solver, ZeroRhsGivesExactZero) {
  ProblemSpec spec;
  spec.name = "zero";
  spec.mu = 1.0;
  spec.k = 2;
  spec.default_tag = BoundaryTag::Neumann;
  spec.advection = [](Point2) { return std::array<double, 2>{0.8, 0.6}; };
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const Solution sol = solve(assemble_system(ctx));
  for (double v : sol.u.coeffs) EXPECT_EQ(v, 0.0);
  for (double v : sol.ubar.coeffs) EXPECT_EQ(v, 0.0);
}

TEST(Solver, RecoveryResidualSmall) {
  ProblemSpec spec = preset_elliptic_sine(2, 5.0);
  Mesh mesh = build_uniform_square_mesh(4, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const BlockSystem sys = assemble_system(ctx);
  const Solution sol = solve(sys);
  EXPECT_LE(sol.stats.condensed_residual, 1e-10);
  // Re-substitute the recovered pair into the full coupled system.
  const Eigen::MatrixXd A = sys.full_dense();
  Eigen::VectorXd b(sys.n_cell_dofs() + sys.n_facet_free());
  b << sys.bc, sys.bf;
  const Eigen::VectorXd x = full_vector(ctx, sol);
  EXPECT_LE((A * x - b).norm() / std::max(1.0, b.norm()), 1e-10);
}

TEST(Solver, PolynomialExactness) {
  // Degree <= k manufactured solutions are reproduced to solver precision.
  for (int k : {1, 2}) {
    Poly2 u;
    if (k == 1)
      u.c = {{0.5, -0.2}, {0.3}};
    else
      u.c = {{0.5, -0.2, 0.4}, {0.3, -0.6}, {0.7}};
    // advective-reaction variant
    {
      ProblemSpec spec = preset_custom_poly(k, 1, 1.0, 0.0, 0.0, {0.8, 0.6}, u);
      Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
      apply_boundary_tags(mesh, spec);
      const Context ctx(mesh, spec);
      const Solution sol = solve(assemble_system(ctx));
      const Field exact = interpolate_cellwise(spec.exact, mesh, k);
      for (std::size_t i = 0; i < sol.u.coeffs.size(); ++i)
        EXPECT_NEAR(sol.u.coeffs[i], exact.coeffs[i], 1e-10);
    }
    // reaction-diffusion variant (Neumann data from the exact gradient)
    {
      ProblemSpec spec = preset_custom_poly(k, 1, 1.0, 1.0, 4.0 * k * k, {0.0, 0.0}, u);
      Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
      apply_boundary_tags(mesh, spec);
      const Context ctx(mesh, spec);
      const Solution sol = solve(assemble_system(ctx));
      const Field exact = interpolate_cellwise(spec.exact, mesh, k);
      for (std::size_t i = 0; i < sol.u.coeffs.size(); ++i)
        EXPECT_NEAR(sol.u.coeffs[i], exact.coeffs[i], 1e-10);
    }
  }
}

TEST(Solver, Deterministic) {
  ProblemSpec spec = preset_elliptic_sine(2, 5.0);
  Mesh mesh = build_uniform_square_mesh(4, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const Solution a = solve(assemble_system(ctx));
  const Solution b = solve(assemble_system(ctx));
  ASSERT_EQ(a.u.coeffs.size(), b.u.coeffs.size());
  for (std::size_t i = 0; i < a.u.coeffs.size(); ++i) EXPECT_EQ(a.u.coeffs[i], b.u.coeffs[i]);
  for (std::size_t i = 0; i < a.ubar.coeffs.size(); ++i)
    EXPECT_EQ(a.ubar.coeffs[i], b.ubar.coeffs[i]);
}

TEST(Solver, SingularPureNeumannDiffusionRejected) {
  // kappa > 0, alpha = 0, pure Neumann, mu = 0: constants are in the kernel
  // of the coupled operator; some stage of either path must fail.
  ProblemSpec spec;
  spec.name = "singular";
  spec.mu = 0.0;
  spec.kappa = 1.0;
  spec.alpha = 0.0;
  spec.k = 1;
  spec.default_tag = BoundaryTag::Neumann;
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const BlockSystem sys = assemble_system(ctx);
  EXPECT_THROW(solve_full(sys), std::runtime_error);
  EXPECT_THROW(solve(sys), std::runtime_error);
}

TEST(Solver, FullSolveSizeCap) {
  ProblemSpec spec = preset_elliptic_sine(3, 36.0);
  Mesh mesh = build_uniform_square_mesh(16, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const BlockSystem sys = assemble_system(ctx);
  EXPECT_THROW(solve_full(sys), std::runtime_error);
}
