// Experiment driver: convergence sweeps, the verification suite, and single
// solves, configured by a JSON document.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "istab/config.hpp"
#include "istab/convergence.hpp"
#include "istab/verification.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolve = 2;
constexpr int kExitVerify = 3;


std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void apply_threads_flag(int threads) {
  // ISTAB_THREADS (if set) always wins; otherwise promote the flag to the env
  // var so every internal parallel region sees one consistent setting.
  if (threads > 0 && std::getenv("ISTAB_THREADS") == nullptr)
    setenv("ISTAB_THREADS", std::to_string(threads).c_str(), 0);
}

int cmd_converge(const std::string& config_path, const std::string& out_override) {
  istab::RunConfig cfg;
  try {
    cfg = istab::load_run_config(config_path);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  if (!out_override.empty()) cfg.out = out_override;
  istab::ConvergenceTable table;
  try {
    table = istab::run_preset(cfg);
  } catch (const std::exception& ex) {
    std::cerr << "solve error: " << ex.what() << "\n";
    return kExitSolve;
  }
  if (cfg.out.empty()) {
    istab::write_csv(table, std::cout);
  } else {
    std::ofstream os(cfg.out, std::ios::binary);
    if (!os) {
      std::cerr << "config error: cannot open output file " << cfg.out << "\n";
      return kExitConfig;
    }
    istab::write_csv(table, os);
  }
  for (const auto& [k, s] : table.slopes) {
    std::cerr << "k=" << k << " slopes:";
    if (s.L2) std::cerr << " L2=" << *s.L2;
    if (s.A) std::cerr << " A=" << *s.A;
    if (s.D) std::cerr << " D=" << *s.D;
    if (s.combined) std::cerr << " combined=" << *s.combined;
    std::cerr << "\n";
  }
  if (!table.ok) {
    for (const auto& row : table.rows)
      if (!row.solved)
        std::cerr << "solve failed (k=" << row.k << ", n=" << row.n << "): " << row.error << "\n";
    return kExitSolve;
  }
  return kExitOk;
}

int cmd_solve(const std::string& config_path, int n, int k, const std::string& dump_prefix) {
  istab::RunConfig cfg;
  try {
    cfg = istab::load_run_config(config_path);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  try {
    istab::ProblemSpec spec = istab::make_problem(cfg, k);
    istab::Mesh mesh = istab::build_uniform_square_mesh(n, {-1.0, 1.0, -1.0, 1.0}, cfg.diagonal);
    istab::apply_boundary_tags(mesh, spec);
    const istab::Context ctx(mesh, spec);
    const istab::BlockSystem sys = istab::assemble_system(ctx);
    const istab::Solution sol = istab::solve(sys);
    std::cout << "preset=" << cfg.preset << " k=" << k << " n=" << n
              << " cell_dofs=" << ctx.cell_space().total_dofs
              << " facet_dofs=" << ctx.facet_space().total_dofs
              << " facet_free=" << ctx.facet_space().free_dofs << "\n";
    std::cout << "condensed_residual=" << sol.stats.condensed_residual
              << " max_pivot_ratio=" << sol.stats.max_pivot_ratio << "\n";
    if (ctx.has_exact()) {
      const istab::NormReport nr = istab::compute_norm_report(ctx, sol.u, sol.ubar);
      std::cout << "err_L2=" << nr.err_L2 << " err_A=" << nr.err_A << " err_D=" << nr.err_D
                << " err_Aprime=" << nr.err_Aprime << " err_Dprime=" << nr.err_Dprime << "\n";
    }
    std::cout << "conservation_defect="
              << istab::local_conservation_check(ctx, sol.u, sol.ubar) << "\n";
    if (!dump_prefix.empty()) {
      {
        std::ofstream os(dump_prefix + "_mesh.txt", std::ios::binary);
        istab::dump_mesh(mesh, os);
      }
      std::ofstream oc(dump_prefix + "_cell.txt", std::ios::binary);
      oc.precision(17);
      for (double v : sol.u.coeffs) oc << v << "\n";
      std::ofstream of(dump_prefix + "_facet.txt", std::ios::binary);
      of.precision(17);
      for (double v : sol.ubar.coeffs) of << v << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "solve error: " << ex.what() << "\n";
    return kExitSolve;
  }
  return kExitOk;
}

struct ProbeLog {
  bool all_pass = true;
  void report(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " " << name << ": " << detail << "\n";
    if (!pass) all_pass = false;
  }
  void info(const std::string& name, const std::string& detail) {
    std::cout << "INFO " << name << ": " << detail << "\n";
  }
};

istab::Field random_cell_field(const istab::Context& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  istab::Field f;
  f.coeffs.resize(ctx.cell_space().total_dofs);
  for (double& v : f.coeffs) v = unif(rng);
  return f;
}

istab::Field random_facet_field(const istab::Context& ctx, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  istab::Field f;
  f.coeffs.assign(ctx.facet_space().total_dofs, 0.0);
  for (int d = 0; d < ctx.facet_space().total_dofs; ++d)
    if (!ctx.facet_space().constrained[d]) f.coeffs[d] = unif(rng);
  return f;
}

double source_l2(const istab::Context& ctx) {
  double s = 0.0;
  for (int c = 0; c < ctx.mesh().num_cells(); ++c)
    for (int q = 0; q < ctx.volume_rule().size(); ++q) {
      const double fv = ctx.source_at(c, ctx.data_vol(), q);
      s += ctx.volume_rule().weights[q] * ctx.geometry(c).detJ * fv * fv;
    }
  return std::sqrt(s);
}

int cmd_verify(double forced_alpha, int dg_l) {
  if (dg_l != 0) {
    std::cerr << "config error: the l=0 equivalence probes require l=0 (got --dg-l=" << dg_l
              << ")\n";
    return kExitConfig;
  }
  ProbeLog log;
  std::mt19937 rng(20260824);
  try {
    // Coercivity identity, constant divergence-free field.
    {
      double worst = 0.0;
      for (int k : {1, 2, 3}) {
        istab::ProblemSpec spec;
        spec.name = "verify_coercivity";
        spec.mu = 1.0;
        spec.k = k;
        spec.l = 1;
        spec.default_tag = istab::BoundaryTag::Neumann;
        spec.advection = [](istab::Point2) { return std::array<double, 2>{0.8, 0.6}; };
        istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        for (int t = 0; t < 10; ++t) {
          const istab::Field u = random_cell_field(ctx, rng);
          const istab::Field ub = random_facet_field(ctx, rng);
          worst = std::max(
              worst, istab::coercivity_identity_A(ctx, istab::discrete_pair(ctx, u, ub)));
        }
      }
      log.report("coercivity_identity_const_a", worst <= 1e-12,
                 "max defect " + fmt(worst) + " (tol 1e-12)");
    }
    // Coercivity identity, interpolated exponential vortex field.
    {
      double worst = 0.0;
      for (int k : {1, 2, 3}) {
        istab::ProblemSpec spec;
        spec.name = "verify_coercivity_exp";
        spec.mu = 1.0;
        spec.k = k;
        spec.l = 1;
        spec.default_tag = istab::BoundaryTag::Neumann;
        spec.advection = istab::advection_exp_field;
        istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        for (int t = 0; t < 10; ++t) {
          const istab::Field u = random_cell_field(ctx, rng);
          const istab::Field ub = random_facet_field(ctx, rng);
          worst = std::max(
              worst, istab::coercivity_identity_A(ctx, istab::discrete_pair(ctx, u, ub)));
        }
      }
      log.report("coercivity_identity_exp_field", worst <= 1e-8,
                 "max defect " + fmt(worst) + " (tol 1e-8)");
    }
    // Diffusive coercivity threshold behavior.
    {
      bool pass = true;
      std::string detail;
      double prev = -1e300;
      for (double alpha : {2.0, 5.0, 10.0, 50.0}) {
        istab::ProblemSpec spec = istab::preset_elliptic_sine(1, alpha);
        istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        const double beta = istab::coercivity_threshold_D(ctx);
        detail += "beta_D(" + fmt(alpha) + ")=" + fmt(beta) + " ";
        if (beta < prev - 1e-12) pass = false;
        prev = beta;
      }
      for (int k : {1, 2, 3}) {
        istab::ProblemSpec spec = istab::preset_elliptic_sine(k, 4.0 * k * k);
        istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        const double beta = istab::coercivity_threshold_D(ctx);
        detail += "beta_D(4k^2,k=" + std::to_string(k) + ")=" + fmt(beta) + " ";
        if (!(beta > 0.0)) pass = false;
      }
      log.report("coercivity_threshold_D", pass, detail);
      if (forced_alpha > 0.0) {
        istab::ProblemSpec spec = istab::preset_elliptic_sine(1, forced_alpha);
        istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        try {
          const double beta = istab::coercivity_threshold_D(ctx);
          if (beta <= 0.0)
            log.info("coercivity_threshold_forced",
                     "alpha=" + fmt(forced_alpha) + " below threshold: beta_D=" +
                         fmt(beta) + " (informational-failed)");
          else
            log.info("coercivity_threshold_forced",
                     "alpha=" + fmt(forced_alpha) +
                         " beta_D=" + fmt(beta));
        } catch (const std::exception& ex) {
          log.info("coercivity_threshold_forced",
                   std::string("degeneracy flagged: ") + ex.what());
        }
      }
    }
    // l = 0 equivalences.
    {
      double worst = 0.0;
      for (int k : {1, 2}) {
        const istab::Mesh mesh = istab::build_uniform_square_mesh(2, {-1, 1, -1, 1});
        worst = std::max(worst,
                         istab::dg_equivalence_l0(mesh, k, istab::DgRegime::Hyperbolic));
        worst =
            std::max(worst, istab::dg_equivalence_l0(mesh, k, istab::DgRegime::Elliptic));
      }
      log.report("dg_equivalence_l0", worst <= 1e-11,
                 "max action defect " + fmt(worst) + " (tol 1e-11)");
    }
    // Local conservation and condensation equivalence on solved presets.
    {
      double worst_cons = 0.0, worst_cond = 0.0;
      for (int variant = 0; variant < 2; ++variant) {
        istab::ProblemSpec spec = variant == 0 ? istab::preset_hyperbolic_bey(1)
                                               : istab::preset_elliptic_sine(1, 5.0);
        istab::Mesh mesh = istab::build_uniform_square_mesh(4, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        const istab::BlockSystem sys = istab::assemble_system(ctx);
        const istab::Solution sol = istab::solve(sys);
        worst_cons =
            std::max(worst_cons, istab::local_conservation_check(ctx, sol.u, sol.ubar) /
                                     std::max(1.0, source_l2(ctx)));
        const istab::Solution ref = istab::solve_full(sys);
        double scale = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < sol.ubar.coeffs.size(); ++i) {
          scale = std::max(scale, std::abs(ref.ubar.coeffs[i]));
          diff = std::max(diff, std::abs(ref.ubar.coeffs[i] - sol.ubar.coeffs[i]));
        }
        worst_cond = std::max(worst_cond, diff / std::max(scale, 1e-300));
      }
      log.report("local_conservation", worst_cons <= 1e-10,
                 "max scaled defect " + fmt(worst_cons) + " (tol 1e-10)");
      log.report("condensation_equivalence", worst_cond <= 1e-10,
                 "max relative difference " + fmt(worst_cond) + " (tol 1e-10)");
    }
    // Inf-sup non-collapse under refinement.
    {
      double bmin = 1e300, bmax = 0.0;
      std::string detail;
      for (int n : {2, 4, 8}) {
        istab::ProblemSpec spec;
        spec.name = "verify_infsup";
        spec.mu = 1.0;
        spec.k = 1;
        spec.l = 1;
        spec.default_tag = istab::BoundaryTag::Neumann;
        spec.advection = [](istab::Point2) { return std::array<double, 2>{0.8, 0.6}; };
        istab::Mesh mesh = istab::build_uniform_square_mesh(n, {-1, 1, -1, 1});
        istab::apply_boundary_tags(mesh, spec);
        const istab::Context ctx(mesh, spec);
        const istab::InfSupReport rep = istab::infsup_estimate(ctx);
        detail += "beta(n=" + std::to_string(n) + ")=" + fmt(rep.beta) + " ";
        bmin = std::min(bmin, rep.beta);
        bmax = std::max(bmax, rep.beta);
      }
      log.report("infsup_non_collapse", bmin / bmax >= 0.5,
                 detail + "min/max=" + fmt(bmin / bmax) + " (need >= 0.5)");
    }
  } catch (const std::exception& ex) {
    std::cerr << "verification error: " << ex.what() << "\n";
    return kExitVerify;
  }
  return log.all_pass ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interface-stabilised finite element driver"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread count (ISTAB_THREADS overrides)");

  auto* converge = app.add_subcommand("converge", "Run a convergence sweep and write a CSV");
  std::string config_path, out_override;
  converge->add_option("--config", config_path, "JSON configuration file")->required();
  converge->add_option("--out", out_override, "Override the CSV output path");

  auto* verify = app.add_subcommand("verify", "Run the verification probe suite");
  double forced_alpha = 0.0;
  int dg_l = 0;
  verify->add_option("--alpha", forced_alpha,
                     "Additionally probe the diffusive threshold at this penalty value");
  verify->add_option("--dg-l", dg_l, "Facet continuity for the DG equivalence probes (must be 0)");

  auto* solve = app.add_subcommand("solve", "Solve a single (k, n) instance");
  std::string solve_config, dump_prefix;
  int solve_n = 4, solve_k = 1;
  solve->add_option("--config", solve_config, "JSON configuration file")->required();
  solve->add_option("-n,--n", solve_n, "Mesh resolution")->required();
  solve->add_option("-k,--k", solve_k, "Polynomial order")->required();
  solve->add_option("--dump", dump_prefix, "Dump mesh and coefficient vectors to PREFIX_*.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  apply_threads_flag(threads);

  if (converge->parsed()) return cmd_converge(config_path, out_override);
  if (verify->parsed()) return cmd_verify(forced_alpha, dg_l);
  if (solve->parsed()) return cmd_solve(solve_config, solve_n, solve_k, dump_prefix);
  return kExitConfig;
}
