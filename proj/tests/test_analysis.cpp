#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "istab/convergence.hpp"
#include "istab/norms.hpp"
#include "istab/solver.hpp"
#include "istab/verification.hpp"

using namespace istab;

namespace {

Field random_cell_field(const Context& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Field f;
  f.coeffs.resize(ctx.cell_space().total_dofs);
  for (double& v : f.coeffs) v = unif(rng);
  return f;
}

Field random_facet_field(const Context& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Field f;
  f.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
  for (int d = 0; d < ctx.facet_space().total_dofs; ++d)
    if (!ctx.facet_space().constrained[d]) f.coeffs[d] = unif(rng);
  return f;
}

ProblemSpec advective_spec(int k) {
  ProblemSpec s;
  s.name = "test_adv";
  s.mu = 1.0;
  s.k = k;
  s.default_tag = BoundaryTag::Neumann;
  s.advection = [](Point2) { return std::array<double, 2>{0.8, 0.6}; };
  return s;
}

Context make_context(ProblemSpec spec, Mesh& mesh) {
  apply_boundary_tags(mesh, spec);
  return Context(mesh, spec);
}

}  // namespace

TEST(Norms, ConstantPairClosedForm) {
  // v = (c, c), mu = 1, a = (0.8, 0.6) on (-1,1)^2: only the mass and the
  // Gamma trace survive; the boundary integral of |a.n| is 2*2*0.8 + 2*2*0.6.
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  const Context ctx = make_context(advective_spec(1), mesh);
  const double cval = 0.7;
  Field u, ub;
  u.coeffs.assign(ctx.cell_space().total_dofs, cval);
  ub.coeffs.assign(ctx.facet_space().total_dofs, cval);
  const double na = norm_A(ctx, discrete_pair(ctx, u, ub));
  EXPECT_NEAR(na * na, (4.0 + 5.6) * cval * cval, 1e-12);
}

TEST(Norms, ZeroPairGivesZero) {
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  ProblemSpec spec = advective_spec(1);
  spec.kappa = 1.0;
  spec.alpha = 5.0;
  const Context ctx = make_context(spec, mesh);
  Field u, ub;
  u.coeffs.assign(ctx.cell_space().total_dofs, 0.0);
  ub.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
  const PairEvaluator v = discrete_pair(ctx, u, ub);
  EXPECT_EQ(norm_A(ctx, v), 0.0);
  EXPECT_EQ(norm_Aprime(ctx, v), 0.0);
  EXPECT_EQ(norm_D(ctx, v), 0.0);
  EXPECT_EQ(norm_Dprime(ctx, v), 0.0);
  EXPECT_EQ(l2_norm(ctx, v), 0.0);
}

TEST(Norms, InclusionAandD) {
  std::mt19937 rng(55);
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  ProblemSpec spec = advective_spec(2);
  spec.kappa = 0.3;
  spec.alpha = 8.0;
  const Context ctx = make_context(spec, mesh);
  for (int t = 0; t < 10; ++t) {
    const Field u = random_cell_field(ctx, rng);
    const Field ub = random_facet_field(ctx, rng);
    const PairEvaluator v = discrete_pair(ctx, u, ub);
    EXPECT_LE(norm_A(ctx, v), norm_Aprime(ctx, v) * (1.0 + 1e-14));
    EXPECT_LE(norm_D(ctx, v), norm_Dprime(ctx, v) * (1.0 + 1e-14));
  }
}

TEST(Norms, DiffusiveNormOfContinuousFunction) {
  // Globally continuous trace-consistent pair: the penalty term vanishes and
  // norm_D = sqrt(kappa) |w|_1.
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  ProblemSpec spec;
  spec.name = "d";
  spec.kappa = 2.0;
  spec.alpha = 6.0;
  spec.k = 1;
  spec.default_tag = BoundaryTag::Neumann;
  const Context ctx = make_context(spec, mesh);
  const auto lin = [](Point2 p) { return 0.4 * p.x - 1.1 * p.y; };
  const Field w = interpolate_cellwise(lin, mesh, 1);
  const Field wb = facet_trace_interpolate(lin, ctx.facet_space());
  const double nd = norm_D(ctx, discrete_pair(ctx, w, wb));
  EXPECT_NEAR(nd * nd, 2.0 * (0.16 + 1.21) * 4.0, 1e-12);
}

TEST(Norms, GuardsOnDegenerateParameters) {
  Mesh mesh = build_uniform_square_mesh(1, {-1, 1, -1, 1});
  const Context ctx = make_context(advective_spec(1), mesh);  // kappa = 0
  Field u, ub;
  u.coeffs.assign(ctx.cell_space().total_dofs, 0.0);
  ub.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
  const PairEvaluator v = discrete_pair(ctx, u, ub);
  EXPECT_THROW(norm_D(ctx, v), std::invalid_argument);
  EXPECT_THROW(norm_Dprime(ctx, v), std::invalid_argument);
}

TEST(Norms, L2ErrorVanishesForRepresentableExact) {
  Poly2 p;
  p.c = {{0.5, -0.2, 0.4}, {0.3, -0.6}, {0.7}};
  ProblemSpec spec = preset_custom_poly(2, 1, 1.0, 0.0, 0.0, {0.8, 0.6}, p);
  Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  apply_boundary_tags(mesh, spec);
  const Context ctx(mesh, spec);
  const Field uh = interpolate_cellwise(spec.exact, mesh, 2);
  EXPECT_LE(l2_error(ctx, uh), 1e-13);
}

TEST(Rates, FitExamples) {
  {
    const RateSummary rs = fit_rates({1.0, 0.5}, {1.0, 0.25});
    ASSERT_TRUE(rs.pairwise[1].has_value());
    EXPECT_NEAR(*rs.pairwise[1], 2.0, 1e-13);
    ASSERT_TRUE(rs.slope.has_value());
    EXPECT_NEAR(*rs.slope, 2.0, 1e-13);
  }
  {
    const RateSummary rs = fit_rates({1.0, 0.5, 0.25}, {1.0, 1.0, 1.0});
    EXPECT_NEAR(*rs.pairwise[1], 0.0, 1e-13);
    EXPECT_NEAR(*rs.pairwise[2], 0.0, 1e-13);
    EXPECT_NEAR(*rs.slope, 0.0, 1e-13);
  }
  {
    // Zero entries make the affected pair undefined instead of NaN.
    const RateSummary rs = fit_rates({1.0, 0.5, 0.25}, {1.0, 0.0, 0.25});
    EXPECT_FALSE(rs.pairwise[1].has_value());
    EXPECT_FALSE(rs.pairwise[2].has_value());
    ASSERT_TRUE(rs.slope.has_value());  // two valid points remain
    EXPECT_TRUE(std::isfinite(*rs.slope));
  }
  EXPECT_THROW(fit_rates({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Coercivity, IdentityConstantField) {
  std::mt19937 rng(77);
  double worst = 0.0;
  for (int k : {1, 2, 3}) {
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(advective_spec(k), mesh);
    for (int t = 0; t < 10; ++t) {
      const Field u = random_cell_field(ctx, rng);
      const Field ub = random_facet_field(ctx, rng);
      worst = std::max(worst, coercivity_identity_A(ctx, discrete_pair(ctx, u, ub)));
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Coercivity, IdentityInterpolatedExponentialField) {
  std::mt19937 rng(78);
  double worst = 0.0;
  for (int k : {1, 2, 3}) {
    ProblemSpec spec = advective_spec(k);
    spec.advection = advection_exp_field;
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    for (int t = 0; t < 10; ++t) {
      const Field u = random_cell_field(ctx, rng);
      const Field ub = random_facet_field(ctx, rng);
      worst = std::max(worst, coercivity_identity_A(ctx, discrete_pair(ctx, u, ub)));
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Equivalence, L0UpwindDgAndSipVariant) {
  const Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
  EXPECT_LE(dg_equivalence_l0(mesh, 1, DgRegime::Hyperbolic), 1e-11);
  EXPECT_LE(dg_equivalence_l0(mesh, 1, DgRegime::Elliptic), 1e-11);
}

TEST(Conservation, ZeroAndConstantAndSolvedCases) {
  // Zero data: zero solution, zero defect.
  {
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(advective_spec(1), mesh);
    Field u, ub;
    u.coeffs.assign(ctx.cell_space().total_dofs, 0.0);
    ub.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
    EXPECT_EQ(local_conservation_check(ctx, u, ub), 0.0);
  }
  // Constant-solution preset.
  {
    Poly2 one;
    one.c = {{1.0}};
    ProblemSpec spec = preset_custom_poly(2, 1, 1.0, 0.0, 0.0, {0.8, 0.6}, one);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    apply_boundary_tags(mesh, spec);
    const Context ctx(mesh, spec);
    const Solution sol = solve(assemble_system(ctx));
    EXPECT_LE(local_conservation_check(ctx, sol.u, sol.ubar), 1e-12);
  }
  // Solved presets.
  for (int variant = 0; variant < 2; ++variant) {
    ProblemSpec spec =
        variant == 0 ? preset_hyperbolic_bey(2) : preset_elliptic_sine(2, 5.0);
    Mesh mesh = build_uniform_square_mesh(4, {-1, 1, -1, 1});
    apply_boundary_tags(mesh, spec);
    const Context ctx(mesh, spec);
    const Solution sol = solve(assemble_system(ctx));
    EXPECT_LE(local_conservation_check(ctx, sol.u, sol.ubar), 1e-10 * 50.0);
  }
}

TEST(InfSup, SingleCellAndSmallMeshPositive) {
  {
    ProblemSpec spec = advective_spec(1);
    Mesh mesh = build_single_triangle_mesh({0, 0}, {1, 0}, {0, 1});
    const Context ctx = make_context(spec, mesh);
    EXPECT_GT(infsup_estimate(ctx).beta, 0.0);
  }
  {
    ProblemSpec spec = advective_spec(1);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    EXPECT_GT(infsup_estimate(ctx).beta, 0.0);
  }
  // kappa > 0 is rejected: the probe is defined for the advective form.
  {
    ProblemSpec spec = advective_spec(1);
    spec.kappa = 1.0;
    spec.alpha = 4.0;
    Mesh mesh = build_uniform_square_mesh(1, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    EXPECT_THROW(infsup_estimate(ctx), std::invalid_argument);
  }
}

TEST(CoercivityThresholdD, MonotoneInAlphaAndPositiveAtRule) {
  double prev = -1e300;
  for (double alpha : {2.0, 5.0, 10.0, 50.0}) {
    ProblemSpec spec = preset_elliptic_sine(1, alpha);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    const double beta = coercivity_threshold_D(ctx);
    EXPECT_GE(beta, prev - 1e-12);
    prev = beta;
  }
  {
    ProblemSpec spec = preset_elliptic_sine(1, 4.0);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    EXPECT_GT(coercivity_threshold_D(ctx), 0.0);
  }
  // alpha = 0 leaves the norm degenerate and is flagged.
  {
    ProblemSpec spec = preset_elliptic_sine(1, 0.0);
    Mesh mesh = build_uniform_square_mesh(2, {-1, 1, -1, 1});
    const Context ctx = make_context(spec, mesh);
    EXPECT_THROW(coercivity_threshold_D(ctx), std::invalid_argument);
  }
}

TEST(FacetControl, BoundedAcrossRefinement) {
  double cmin = 1e300, cmax = 0.0;
  for (int n : {2, 4, 8}) {
    Mesh mesh = build_uniform_square_mesh(n, {-1, 1, -1, 1});
    const Context ctx = make_context(advective_spec(1), mesh);
    const double c = facet_control_constant(ctx);
    EXPECT_GT(c, 0.0);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  EXPECT_LE(cmax / cmin, 2.0);
}

TEST(Interpolation, ContinuityNormRateOfInterpolationError) {
  // |||u - I_k u|||_{A'} for the hyperbolic solution scales like h^{k+1/2}.
  const int k = 1;
  std::vector<double> h, err;
  for (int n : {4, 8, 16, 32}) {
    ProblemSpec spec = preset_hyperbolic_bey(k);
    Mesh mesh = build_uniform_square_mesh(n, {-1, 1, -1, 1});
    apply_boundary_tags(mesh, spec);
    const Context ctx(mesh, spec);
    const Field uh = interpolate_cellwise(spec.exact, mesh, k);
    const Field ub = facet_trace_interpolate(spec.exact, ctx.facet_space());
    err.push_back(norm_Aprime(ctx, error_pair(ctx, uh, ub)));
    h.push_back(*std::max_element(ctx.mesh().h_cell.begin(), ctx.mesh().h_cell.end()));
  }
  const RateSummary rs = fit_rates(h, err);
  ASSERT_TRUE(rs.slope.has_value());
  EXPECT_GE(*rs.slope, k + 0.2);
  EXPECT_LE(*rs.slope, k + 0.8);
}
