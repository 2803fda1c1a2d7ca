#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "istab/norms.hpp"
#include "istab/solver.hpp"
#include "istab/verification.hpp"

namespace istab {

/// Error norms of one solve.
struct NormReport {
  double err_L2 = 0.0;
  double err_A = 0.0;
  double err_Aprime = 0.0;
  double err_D = 0.0;
  double err_Dprime = 0.0;
  double h_max = 0.0;
  int dofs = 0;  // global facet dofs
};

inline NormReport compute_norm_report(const Context& ctx, const Field& u, const Field& ubar) {
  NormReport r;
  const PairEvaluator err = error_pair(ctx, u, ubar);
  r.err_L2 = l2_norm(ctx, err);
  r.err_A = norm_A(ctx, err);
  r.err_Aprime = norm_Aprime(ctx, err);
  if (ctx.spec().kappa > 0.0) {
    r.err_D = norm_D(ctx, err);
    if (ctx.spec().alpha > 0.0) r.err_Dprime = norm_Dprime(ctx, err);
  }
  for (double h : ctx.mesh().h_cell) r.h_max = std::max(r.h_max, h);
  r.dofs = ctx.facet_space().total_dofs;
  return r;
}

/// Pairwise rates and the least-squares slope over the finest 3 meshes.
struct RateSummary {
  std::vector<std::optional<double>> pairwise;  // pairwise[i] pairs row i-1 with row i
  std::optional<double> slope;
};

/// Rates from (h, error) sequences ordered from coarse to fine (decreasing h).
/// Zero errors make the affected pair (and the slope, if too few valid points
/// remain) undefined rather than NaN.
inline RateSummary fit_rates(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw std::invalid_argument("fit_rates: length mismatch");
  RateSummary rs;
  const int n = static_cast<int>(h.size());
  rs.pairwise.assign(n, std::nullopt);
  for (int i = 1; i < n; ++i)
    if (err[i - 1] > 0.0 && err[i] > 0.0)
      rs.pairwise[i] = std::log(err[i - 1] / err[i]) / std::log(h[i - 1] / h[i]);
  // Least-squares slope of log e vs log h over the 3 finest rows.
  std::vector<double> lx, ly;
  for (int i = std::max(0, n - 3); i < n; ++i)
    if (err[i] > 0.0) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(err[i]));
    }
  if (lx.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double m = static_cast<double>(lx.size());
    rs.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return rs;
}

enum class AlphaRule { Const, FourKSquared };

/// One convergence-study configuration (a preset plus sweep lists).
struct RunConfig {
  std::string preset = "elliptic_sine";  // hyperbolic_bey | elliptic_sine | advdiff_exp | custom
  std::vector<int> k_list = {1};
  std::vector<int> n_list = {4, 8};
  int l = 1;
  AlphaRule alpha_rule = AlphaRule::FourKSquared;
  double alpha_value = 0.0;  // for AlphaRule::Const
  double kappa = 1.0;        // advdiff_exp / custom
  double mu = 0.0;           // custom
  std::array<double, 2> advection = {0.0, 0.0};  // custom (constant field)
  Poly2 exact_poly;                              // custom
  std::string boundary = "neumann";              // custom: neumann | dirichlet
  Diagonal diagonal = Diagonal::Right;
  int threads = 0;
  std::string out;  // CSV output path; empty = stdout
};

inline double alpha_for(const RunConfig& cfg, int k) {
  return cfg.alpha_rule == AlphaRule::FourKSquared ? 4.0 * k * k : cfg.alpha_value;
}

inline ProblemSpec make_problem(const RunConfig& cfg, int k) {
  if (cfg.preset == "hyperbolic_bey") return preset_hyperbolic_bey(k, cfg.l);
  if (cfg.preset == "elliptic_sine") return preset_elliptic_sine(k, alpha_for(cfg, k), cfg.l);
  if (cfg.preset == "advdiff_exp")
    return preset_advdiff_exp(k, cfg.kappa, alpha_for(cfg, k), cfg.l);
  if (cfg.preset == "custom")
    return preset_custom_poly(k, cfg.l, cfg.mu, cfg.kappa, alpha_for(cfg, k), cfg.advection,
                              cfg.exact_poly,
                              cfg.boundary == "dirichlet" ? BoundaryTag::Dirichlet
                                                          : BoundaryTag::Neumann);
  throw std::invalid_argument("unknown preset: " + cfg.preset);
}

struct CsvRow {
  std::string preset;
  int k = 0, l = 1, n = 0;
  double alpha = 0.0;
  NormReport nr;
  double conservation = 0.0;
  std::optional<double> rate_L2, rate_A, rate_combined;
  bool solved = false;
  std::string error;
};

struct ConvergenceTable {
  std::vector<CsvRow> rows;  // k-major, n ascending (coarse to fine)
  struct Slopes {
    std::optional<double> L2, A, D, combined;
  };
  std::map<int, Slopes> slopes;
  bool ok = true;
};

/// Solve one (k, n) instance of a configuration and fill a CSV row.
inline CsvRow run_single(const RunConfig& cfg, int k, int n) {
  CsvRow row;
  row.preset = cfg.preset;
  row.k = k;
  row.l = cfg.l;
  row.n = n;
  ProblemSpec spec = make_problem(cfg, k);
  row.alpha = spec.alpha;
  try {
    Mesh mesh = build_uniform_square_mesh(n, {-1.0, 1.0, -1.0, 1.0}, cfg.diagonal);
    apply_boundary_tags(mesh, spec);
    const Context ctx(mesh, spec);
    const BlockSystem sys = assemble_system(ctx);
    const Solution sol = solve(sys);
    row.nr = compute_norm_report(ctx, sol.u, sol.ubar);
    row.conservation = local_conservation_check(ctx, sol.u, sol.ubar);
    row.solved = true;
  } catch (const std::exception& ex) {
    row.error = ex.what();
  }
  return row;
}

/// Run the full sweep. Sweep items may execute concurrently; rows are buffered
/// and emitted in canonical (k, n) order regardless of completion order.
inline ConvergenceTable run_preset(const RunConfig& cfg) {
  ConvergenceTable table;
  std::vector<std::pair<int, int>> items;
  for (int k : cfg.k_list)
    for (int n : cfg.n_list) items.emplace_back(k, n);
  std::vector<CsvRow> rows(items.size());
  parallel_for(
      static_cast<int>(items.size()),
      [&](int i) { rows[i] = run_single(cfg, items[i].first, items[i].second); }, cfg.threads);
  for (auto& row : rows)
    if (!row.solved) table.ok = false;

  // Rates per k over the n sweep.
  std::size_t idx = 0;
  for (int k : cfg.k_list) {
    std::vector<double> h, eL2, eA, eComb;
    const std::size_t begin = idx;
    for (std::size_t j = 0; j < cfg.n_list.size(); ++j, ++idx) {
      const CsvRow& r = rows[idx];
      h.push_back(r.nr.h_max);
      eL2.push_back(r.solved ? r.nr.err_L2 : 0.0);
      eA.push_back(r.solved ? r.nr.err_A : 0.0);
      eComb.push_back(r.solved ? r.nr.err_A + r.nr.err_D : 0.0);
    }
    const RateSummary rL2 = fit_rates(h, eL2), rA = fit_rates(h, eA), rC = fit_rates(h, eComb);
    for (std::size_t j = 0; j < cfg.n_list.size(); ++j) {
      rows[begin + j].rate_L2 = rL2.pairwise[j];
      rows[begin + j].rate_A = rA.pairwise[j];
      rows[begin + j].rate_combined = rC.pairwise[j];
    }
    table.slopes[k] = {rL2.slope, rA.slope, std::nullopt, rC.slope};
    std::vector<double> eD;
    for (std::size_t j = 0; j < cfg.n_list.size(); ++j)
      eD.push_back(rows[begin + j].solved ? rows[begin + j].nr.err_D : 0.0);
    table.slopes[k].D = fit_rates(h, eD).slope;
  }
  table.rows = std::move(rows);
  return table;
}

namespace detail {

inline std::string fmt16(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16g", v);
  return buf;
}

inline std::string fmt_rate(const std::optional<double>& r) {
  return r ? fmt16(*r) : std::string();
}

}  // namespace detail

/// Deterministic CSV: fixed column set, 16 significant digits, UNIX newlines;
/// rates are blank on each k's coarsest row.
inline void write_csv(const ConvergenceTable& table, std::ostream& os) {
  os << "preset,k,l,alpha,n,h_max,dofs_facet_global,err_L2,err_A,err_D,err_combined,"
        "rate_L2,rate_A,rate_combined,conservation_defect\n";
  for (const CsvRow& r : table.rows) {
    os << r.preset << ',' << r.k << ',' << r.l << ',' << detail::fmt16(r.alpha) << ',' << r.n
       << ',' << detail::fmt16(r.nr.h_max) << ',' << r.nr.dofs << ','
       << detail::fmt16(r.nr.err_L2) << ',' << detail::fmt16(r.nr.err_A) << ','
       << detail::fmt16(r.nr.err_D) << ',' << detail::fmt16(r.nr.err_A + r.nr.err_D) << ','
       << detail::fmt_rate(r.rate_L2) << ',' << detail::fmt_rate(r.rate_A) << ','
       << detail::fmt_rate(r.rate_combined) << ',' << detail::fmt16(r.conservation) << '\n';
  }
}

}  // namespace istab
