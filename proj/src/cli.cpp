// SPDX-License-Identifier: Apache-2.0

#include "mor/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mor/airga.hpp"
#include "mor/cplx.hpp"
#include "mor/diagnostics.hpp"
#include "mor/errors.hpp"
#include "mor/kernels.hpp"
#include "mor/model_io.hpp"
#include "mor/trace_io.hpp"

namespace mor
{

namespace
{

struct GridSpec
{
  double lo = 1e-2;
  double hi = 1e2;
  std::int64_t count = 200;
};

// "a:b:k" -> k log-spaced points on [a, b] (a single point when k = 1).
GridSpec parse_grid(const std::string &s)
{
  GridSpec g;
  std::istringstream ss(s);
  std::string a, b, k;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, k, ':'))
  {
    throw ArgumentError("grid spec must be a:b:k, got '" + s + "'");
  }
  g.lo = std::stod(a);
  g.hi = std::stod(b);
  g.count = std::stoll(k);
  if (!(g.lo > 0.0) || g.hi < g.lo || g.count < 1)
  {
    throw ArgumentError("grid spec needs 0 < a <= b and k >= 1");
  }
  return g;
}

std::vector<double> grid_points(const GridSpec &g)
{
  if (g.count == 1)
  {
    return {g.lo};
  }
  return default_frequency_grid(g.count, g.lo, g.hi);
}

ExpansionPointSet parse_points(const std::string &s)
{
  std::istringstream ss(s);
  std::string a, b, l;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, l, ':'))
  {
    throw ArgumentError("points spec must be a:b:l, got '" + s + "'");
  }
  return linspace_points(std::stod(a), std::stod(b), std::stoll(l));
}

AirgaConfig::Solver parse_solver(const std::string &s)
{
  if (s == "direct")
  {
    return AirgaConfig::Solver::direct;
  }
  if (s == "cg")
  {
    return AirgaConfig::Solver::cg_plain;
  }
  if (s == "cg-spai")
  {
    return AirgaConfig::Solver::cg_spai;
  }
  if (s == "cg-spai-update")
  {
    return AirgaConfig::Solver::cg_spai_update;
  }
  throw ArgumentError("unknown solver '" + s + "' (direct | cg | cg-spai | cg-spai-update)");
}

double full_minus_reduced_h2(const SecondOrderSystem &full, const ReducedSystem &red, double *full_norm)
{
  if (full.order() <= 500)
  {
    // Dense/Lyapunov route: treat the full system as an r = n reduced system.
    ReducedSystem as_reduced;
    as_reduced.Mh = sparse_to_dense(full.M);
    as_reduced.Dh = sparse_to_dense(full.D);
    as_reduced.Kh = sparse_to_dense(full.K);
    as_reduced.Fh = full.F;
    as_reduced.Cph = full.Cp;
    as_reduced.Cvh = full.Cv;
    as_reduced.r = full.order();
    *full_norm = h2_norm(as_reduced);
    return h2_distance(as_reduced, red);
  }
  const TransferFunction tf(full.M, full.D, full.K, full.F, full.Cp, full.Cv);
  const double hint = 2.0 * std::sqrt(frob_norm(full.K) / std::max(frob_norm(full.M), 1e-300)) + 1.0;
  *full_norm = h2_from_density([&](double w) { return tf.frob_sq(cxd(0.0, w)); }, hint);
  const auto diff_density = [&](double w) {
    const auto hf = tf.eval(cxd(0.0, w));
    const auto hr = reduced_transfer(red, cxd(0.0, w));
    double acc = 0.0;
    for (std::size_t k = 0; k < hf.size(); ++k)
    {
      acc += std::norm(hf[k] - hr[k]);
    }
    return acc;
  };
  return h2_from_density(diff_density, hint);
}

int cmd_generate(std::int64_t n, double alpha, double beta, double stiffness, double mass_scale,
                 const std::string &mass, const std::string &io, const std::string &out)
{
  ModelSpec spec;
  spec.n = n;
  spec.alpha = alpha;
  spec.beta = beta;
  spec.stiffness_scale = stiffness;
  spec.mass_scale = mass_scale;
  if (mass == "identity")
  {
    spec.mass = ModelSpec::Mass::identity;
  }
  else if (mass == "consistent")
  {
    spec.mass = ModelSpec::Mass::consistent;
  }
  else
  {
    throw ArgumentError("unknown mass option '" + mass + "' (identity | consistent)");
  }
  if (io == "collocated")
  {
    spec.io = ModelSpec::Io::collocated;
  }
  else if (io == "end-to-end")
  {
    spec.io = ModelSpec::Io::end_to_end;
  }
  else
  {
    throw ArgumentError("unknown io option '" + io + "' (collocated | end-to-end)");
  }
  const SecondOrderSystem sys = beam_generate(spec);
  write_system(out, sys);
  std::cout << "generated n=" << n << " system in " << out << " (nnz K = " << sys.K.nnz() << ")\n";
  return 0;
}

int cmd_reduce(const std::string &in, const AirgaConfig &cfg, const std::string &out, const std::string &trace_dir)
{
  const SecondOrderSystem sys = read_system(in);
  const AirgaResult res = airga_run(sys, cfg);
  write_reduced(out, res.reduced);
  write_trace(trace_dir.empty() ? (std::filesystem::path(out) / "trace") : std::filesystem::path(trace_dir),
              res.trace);

  double precond_total = 0.0;
  for (const auto &p : res.trace.precond_records)
  {
    precond_total += p.seconds;
  }
  double solve_total = 0.0;
  std::int64_t cg_total = 0;
  for (const auto &s : res.trace.solve_records)
  {
    solve_total += s.solve_seconds;
    cg_total += s.cg_iterations;
  }
  std::cout << "solver=" << solver_name(cfg.solver) << " kernel=" << res.trace.kernel_variant
            << " seed=" << cfg.seed << "\n";
  std::cout << "outer_iterations=" << res.trace.outer_iterations << " converged="
            << (res.trace.converged ? "true" : "false") << " r=" << res.reduced.r << "\n";
  std::cout << "solve_seconds=" << solve_total << " precond_seconds=" << precond_total
            << " cg_iterations=" << cg_total << "\n";
  if (!res.trace.converged)
  {
    std::cerr << "warning: outer loop hit max_outer without meeting outer-tol\n";
  }
  return 0;
}

int cmd_evaluate(const std::string &full_dir, const std::string &reduced_dir, const GridSpec &grid)
{
  const SecondOrderSystem full = read_system(full_dir);
  const ReducedSystem red = read_reduced(reduced_dir);
  if (red.Fh.ncols != full.inputs() || red.Cph.nrows != full.outputs())
  {
    throw ValidationError("evaluate: input/output dimensions of the two models differ");
  }

  double full_norm = 0.0;
  const double err = full_minus_reduced_h2(full, red, &full_norm);
  const double rel = full_norm > 0.0 ? err / full_norm : err;

  const TransferFunction tf(full.M, full.D, full.K, full.F, full.Cp, full.Cv);
  double max_point_err = 0.0;
  double at = 0.0;
  for (const double w : grid_points(grid))
  {
    const auto hf = tf.eval(cxd(0.0, w));
    const auto hr = reduced_transfer(red, cxd(0.0, w));
    double acc = 0.0;
    for (std::size_t k = 0; k < hf.size(); ++k)
    {
      acc += std::norm(hf[k] - hr[k]);
    }
    if (std::sqrt(acc) > max_point_err)
    {
      max_point_err = std::sqrt(acc);
      at = w;
    }
  }
  std::cout << "h2_error_absolute=" << err << "\n";
  std::cout << "h2_full_norm=" << full_norm << "\n";
  std::cout << "h2_error_relative=" << rel << "\n";
  std::cout << "max_pointwise_error=" << max_point_err << " at_omega=" << at << "\n";
  return 0;
}

int cmd_diagnose(const std::string &trace_dir, const std::string &system_dir, const GridSpec &grid,
                 const std::string &out)
{
  const RunTrace trace = read_trace(trace_dir);
  const SecondOrderSystem sys = read_system(system_dir);
  const ResidualLedger ledger = build_ledger(trace);

  const DenseMatrix G = check_galerkin_orthogonality(trace.final_basis_blocks, ledger);
  std::cout << "block_orthogonality (trace(V_t^T eta_j)):\n";
  for (std::int64_t t = 0; t < G.nrows; ++t)
  {
    for (std::int64_t j = 0; j < G.ncols; ++j)
    {
      std::printf(" % .3e", G.at(t, j));
    }
    std::printf("\n");
  }

  const PerturbationEstimate Z = compute_Z(ledger);
  std::cout << "z_norm=" << Z.z_norm << "\n";

  const auto freq = grid_points(grid);
  const Theorem2Result t2 = check_theorem2(sys, Z, freq);
  std::cout << "hinf_Kinv=" << t2.hinf_Kinv << "\n";
  std::cout << "stability_condition_value=" << t2.condition_value << "\n";
  std::cout << "stability_holds=" << (t2.holds ? "true" : "false") << "\n";

  double bound = -1.0;
  if (t2.holds)
  {
    bound = theorem1_bound(sys, Z, freq);
    std::cout << "perturbation_h2_bound=" << bound << "\n";
  }

  if (!out.empty())
  {
    std::filesystem::create_directories(out);
    {
      std::ofstream f(std::filesystem::path(out) / "orthogonality.csv");
      for (std::int64_t t = 0; t < G.nrows; ++t)
      {
        for (std::int64_t j = 0; j < G.ncols; ++j)
        {
          f << (j ? "," : "") << G.at(t, j);
        }
        f << "\n";
      }
    }
    std::ofstream f(std::filesystem::path(out) / "diagnostics.txt");
    f << "z_norm=" << Z.z_norm << "\n";
    f << "hinf_Kinv=" << t2.hinf_Kinv << "\n";
    f << "stability_condition_value=" << t2.condition_value << "\n";
    f << "stability_holds=" << (t2.holds ? "true" : "false") << "\n";
    if (bound >= 0.0)
    {
      f << "perturbation_h2_bound=" << bound << "\n";
    }
  }
  return 0;
}

int cmd_bench(const std::string &sizes_s, const std::string &solvers_s, std::int64_t repeats, std::int64_t rmax,
              const std::string &out)
{
  std::vector<std::int64_t> sizes;
  {
    std::istringstream ss(sizes_s);
    std::string tok;
    while (std::getline(ss, tok, ','))
    {
      sizes.push_back(std::stoll(tok));
    }
  }
  std::vector<AirgaConfig::Solver> solvers;
  {
    std::istringstream ss(solvers_s);
    std::string tok;
    while (std::getline(ss, tok, ','))
    {
      solvers.push_back(parse_solver(tok));
    }
  }
  if (sizes.empty() || solvers.empty() || repeats < 1)
  {
    throw ArgumentError("bench: need at least one size, one solver, repeats >= 1");
  }

  std::filesystem::create_directories(out);
  std::ofstream totals(std::filesystem::path(out) / "bench_totals.csv");
  totals << "n,solver,repeats,median_solve_seconds,median_precond_seconds,median_total_seconds,r,outer_iterations,"
            "status\n";
  std::ofstream runs(std::filesystem::path(out) / "bench_runs.csv");
  runs << "n,solver,run,solve_seconds,precond_seconds,total_seconds,r,outer_iterations,cg_iterations\n";
  std::ofstream iters(std::filesystem::path(out) / "bench_iters.csv");
  iters << "n,solver,run,outer,point_index,point,cg_iterations,solve_seconds,precond_seconds\n";

  for (const std::int64_t n : sizes)
  {
    ModelSpec spec;
    spec.n = n;
    const SecondOrderSystem sys = beam_generate(spec);
    for (const auto solver : solvers)
    {
      std::vector<double> solve_s, precond_s, total_s;
      std::int64_t r_final = 0, outers = 0;
      std::string status = "ok";
      for (std::int64_t rep = 0; rep < repeats; ++rep)
      {
        AirgaConfig cfg;
        cfg.solver = solver;
        cfg.r_max = rmax;
        try
        {
          const AirgaResult res = airga_run(sys, cfg);
          double st = 0.0, pt = 0.0;
          std::int64_t cg = 0;
          for (const auto &srec : res.trace.solve_records)
          {
            st += srec.solve_seconds;
            cg += srec.cg_iterations;
          }
          for (const auto &prec : res.trace.precond_records)
          {
            pt += prec.seconds;
          }
          solve_s.push_back(st);
          precond_s.push_back(pt);
          total_s.push_back(res.trace.total_seconds);
          r_final = res.reduced.r;
          outers = res.trace.outer_iterations;
          runs << n << "," << solver_name(solver) << "," << rep << "," << st << "," << pt << ","
               << res.trace.total_seconds << "," << res.reduced.r << "," << res.trace.outer_iterations << "," << cg
               << "\n";
          // per-iteration rows: aggregate solve records per (outer, point)
          for (const auto &orec : res.trace.outer_records)
          {
            for (std::size_t i = 0; i < orec.points.size(); ++i)
            {
              std::int64_t cg_zi = 0;
              double st_zi = 0.0;
              for (const auto &srec : res.trace.solve_records)
              {
                if (srec.outer == orec.outer && srec.point_index == static_cast<std::int64_t>(i))
                {
                  cg_zi += srec.cg_iterations;
                  st_zi += srec.solve_seconds;
                }
              }
              double pt_zi = 0.0;
              for (const auto &prec : res.trace.precond_records)
              {
                if (prec.outer == orec.outer && prec.point_index == static_cast<std::int64_t>(i))
                {
                  pt_zi += prec.seconds;
                }
              }
              iters << n << "," << solver_name(solver) << "," << rep << "," << orec.outer << "," << i << ","
                    << orec.points[i] << "," << cg_zi << "," << st_zi << "," << pt_zi << "\n";
            }
          }
        }
        catch (const std::exception &e)
        {
          status = std::string("error: ") + e.what();
          std::cerr << "bench cell n=" << n << " solver=" << solver_name(solver) << " run=" << rep
                    << " failed: " << e.what() << "\n";
          break;
        }
      }
      const auto median = [](std::vector<double> v) -> double {
        if (v.empty())
        {
          return -1.0;
        }
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
      };
      totals << n << "," << solver_name(solver) << "," << solve_s.size() << "," << median(solve_s) << ","
             << median(precond_s) << "," << median(total_s) << "," << r_final << "," << outers << "," << status
             << "\n";
    }
  }
  std::cout << "bench tables written to " << out << "\n";
  return 0;
}

} // namespace

int run_cli(int argc, const char *const *argv)
{
  CLI::App app{"Model reduction of second order systems by adaptive rational global Arnoldi with preconditioned "
               "iterative solves"};
  app.require_subcommand(1);

  // generate
  auto *gen = app.add_subcommand("generate", "Generate a benchmark chain model as a system directory");
  std::int64_t gen_n = 0;
  double gen_alpha = 0.05, gen_beta = 0.05, gen_stiff = 0.01, gen_mass_scale = 1.0;
  std::string gen_mass = "identity", gen_io = "collocated", gen_out;
  gen->add_option("--n", gen_n, "system order")->required();
  gen->add_option("--alpha", gen_alpha, "mass damping coefficient, in (0,1)");
  gen->add_option("--beta", gen_beta, "stiffness damping coefficient, in (0,1)");
  gen->add_option("--stiffness-scale", gen_stiff, "stiffness scale");
  gen->add_option("--mass-scale", gen_mass_scale, "mass scale");
  gen->add_option("--mass", gen_mass, "identity | consistent");
  gen->add_option("--io", gen_io, "collocated | end-to-end");
  gen->add_option("--out", gen_out, "output system directory")->required();

  // reduce
  auto *red = app.add_subcommand("reduce", "Reduce a system directory");
  std::string red_in, red_solver = "cg-spai", red_points = "1:100:3", red_out, red_trace, red_h2 = "lyapunov",
              red_spai_mode = "sequential";
  AirgaConfig cfg;
  red->add_option("--in", red_in, "input system directory")->required();
  red->add_option("--solver", red_solver, "direct | cg | cg-spai | cg-spai-update");
  red->add_option("--rmax", cfg.r_max, "maximum reduced order");
  red->add_option("--points", red_points, "initial expansion points a:b:l (linearly spaced)");
  red->add_option("--outer-tol", cfg.outer_tol, "outer H2 convergence tolerance");
  red->add_option("--inner-tol", cfg.inner_tol, "inner (intermediate) H2 tolerance");
  red->add_option("--spai-tol", cfg.spai_tol, "SPAI per-column residual tolerance");
  red->add_option("--spai-max-col-iters", cfg.spai_max_col_iters, "SPAI per-column iteration cap");
  red->add_option("--spai-mode", red_spai_mode, "sequential | frozen (frozen is schedule independent)");
  red->add_option("--cg-rtol", cfg.cg_rtol, "CG relative residual tolerance");
  red->add_option("--update-start", cfg.update_start_iteration, "outer iteration from which updates replace rebuilds");
  red->add_option("--max-outer", cfg.max_outer, "outer iteration cap");
  red->add_option("--h2", red_h2, "lyapunov | quadrature");
  red->add_option("--seed", cfg.seed, "seed echoed into reports");
  red->add_option("--out", red_out, "output directory for the reduced system")->required();
  red->add_option("--trace", red_trace, "trace output directory (default <out>/trace)");

  // evaluate
  auto *ev = app.add_subcommand("evaluate", "Compare a reduced model against the full model");
  std::string ev_full, ev_red, ev_grid = "0.01:100:200";
  ev->add_option("--full", ev_full, "full system directory")->required();
  ev->add_option("--reduced", ev_red, "reduced system directory")->required();
  ev->add_option("--grid", ev_grid, "iw grid a:b:k (log spaced)");

  // diagnose
  auto *dg = app.add_subcommand("diagnose", "Stability diagnostics from a cg-strategy run trace");
  std::string dg_trace, dg_sys, dg_grid = "0.01:10000:200", dg_out;
  dg->add_option("--trace", dg_trace, "trace directory from reduce")->required();
  dg->add_option("--system", dg_sys, "full system directory")->required();
  dg->add_option("--grid", dg_grid, "frequency grid a:b:k (log spaced)");
  dg->add_option("--out", dg_out, "optional report output directory");

  // bench
  auto *bn = app.add_subcommand("bench", "Run the size x solver benchmark matrix");
  std::string bn_sizes = "200,2000", bn_solvers = "cg-spai,cg-spai-update", bn_out = "bench_out";
  std::int64_t bn_repeats = 3, bn_rmax = 30;
  bn->add_option("--sizes", bn_sizes, "comma separated system orders");
  bn->add_option("--solvers", bn_solvers, "comma separated solver names");
  bn->add_option("--repeats", bn_repeats, "repetitions per cell (median reported)");
  bn->add_option("--rmax", bn_rmax, "maximum reduced order");
  bn->add_option("--out", bn_out, "output directory");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return 2;
  }

  try
  {
    if (gen->parsed())
    {
      return cmd_generate(gen_n, gen_alpha, gen_beta, gen_stiff, gen_mass_scale, gen_mass, gen_io, gen_out);
    }
    if (red->parsed())
    {
      cfg.solver = parse_solver(red_solver);
      cfg.initial_points = parse_points(red_points);
      if (red_h2 == "quadrature")
      {
        cfg.h2_method = AirgaConfig::H2Method::quadrature;
      }
      else if (red_h2 != "lyapunov")
      {
        throw ArgumentError("unknown h2 method '" + red_h2 + "'");
      }
      if (red_spai_mode == "frozen")
      {
        cfg.spai_mode = SpaiOptions::Mode::frozen;
      }
      else if (red_spai_mode != "sequential")
      {
        throw ArgumentError("unknown spai mode '" + red_spai_mode + "'");
      }
      return cmd_reduce(red_in, cfg, red_out, red_trace);
    }
    if (ev->parsed())
    {
      return cmd_evaluate(ev_full, ev_red, parse_grid(ev_grid));
    }
    if (dg->parsed())
    {
      return cmd_diagnose(dg_trace, dg_sys, parse_grid(dg_grid), dg_out);
    }
    if (bn->parsed())
    {
      return cmd_bench(bn_sizes, bn_solvers, bn_repeats, bn_rmax, bn_out);
    }
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

} // namespace mor
