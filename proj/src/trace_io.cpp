// SPDX-License-Identifier: Apache-2.0

#include "mor/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mor/errors.hpp"
#include "mor/model_io.hpp"

namespace mor
{

namespace
{

std::string fmt17(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

AirgaConfig::Solver solver_from_name(const std::string &name)
{
  if (name == "direct")
  {
    return AirgaConfig::Solver::direct;
  }
  if (name == "cg")
  {
    return AirgaConfig::Solver::cg_plain;
  }
  if (name == "cg-spai")
  {
    return AirgaConfig::Solver::cg_spai;
  }
  if (name == "cg-spai-update")
  {
    return AirgaConfig::Solver::cg_spai_update;
  }
  throw ValidationError("unknown solver name '" + name + "'");
}

std::string join_semicolon(const std::vector<double> &v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    if (i > 0)
    {
      s += ';';
    }
    s += fmt17(v[i]);
  }
  return s;
}

} // namespace

void write_trace(const std::filesystem::path &dir, const RunTrace &trace)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  {
    std::ofstream f(dir / "solve_log.csv");
    f << "outer,inner,point_index,point,cg_iterations,converged,solve_seconds\n";
    for (const SolveRecord &r : trace.solve_records)
    {
      f << r.outer << "," << r.inner << "," << r.point_index << "," << fmt17(r.point) << "," << r.cg_iterations << ","
        << (r.converged ? 1 : 0) << "," << fmt17(r.solve_seconds) << "\n";
    }
  }
  {
    std::ofstream f(dir / "precond_log.csv");
    f << "outer,point_index,point,kind,chain_length,precond_seconds\n";
    for (const PrecondRecord &r : trace.precond_records)
    {
      f << r.outer << "," << r.point_index << "," << fmt17(r.point) << ","
        << (r.kind == SpaiFactor::Kind::base ? "base" : "update") << "," << r.chain_length << ","
        << fmt17(r.seconds) << "\n";
    }
  }
  {
    std::ofstream f(dir / "outer_log.csv");
    f << "outer,inner_steps,r,h2_delta,quadrature_fallback,points_padded,points,moment_errors,projection_seconds\n";
    for (const OuterRecord &r : trace.outer_records)
    {
      f << r.outer << "," << r.inner_steps << "," << r.r << "," << fmt17(r.h2_delta) << ","
        << (r.h2_used_quadrature_fallback ? 1 : 0) << "," << (r.points_padded ? 1 : 0) << ",\""
        << join_semicolon(r.points) << "\",\"" << join_semicolon(r.moment_errors) << "\","
        << fmt17(r.projection_seconds) << "\n";
    }
  }
  {
    std::ofstream f(dir / "ledger.csv");
    f << "order,point_index,point\n";
    for (const LedgerEntry &e : trace.final_ledger)
    {
      f << e.order << "," << e.point_index << "," << fmt17(e.point) << "\n";
    }
  }
  for (std::size_t j = 0; j < trace.final_ledger.size(); ++j)
  {
    const SolveRecord &rec = trace.solve_records.at(static_cast<std::size_t>(trace.final_ledger[j].solve_record));
    write_mm_dense(dir / ("ledger_X_" + std::to_string(j) + ".mtx"), rec.X);
    write_mm_dense(dir / ("ledger_eta_" + std::to_string(j) + ".mtx"), rec.eta);
  }
  for (std::size_t j = 0; j < trace.final_basis_blocks.size(); ++j)
  {
    write_mm_dense(dir / ("basis_" + std::to_string(j) + ".mtx"), trace.final_basis_blocks[j]);
  }
  {
    std::ofstream f(dir / "summary.txt");
    f << "solver=" << solver_name(trace.config.solver) << "\n";
    f << "converged=" << (trace.converged ? "true" : "false") << "\n";
    f << "outer_iterations=" << trace.outer_iterations << "\n";
    f << "r=" << (trace.outer_records.empty() ? 0 : trace.outer_records.back().r) << "\n";
    f << "ledger_entries=" << trace.final_ledger.size() << "\n";
    f << "basis_blocks=" << trace.final_basis_blocks.size() << "\n";
    f << "seed=" << trace.config.seed << "\n";
    f << "kernel_variant=" << trace.kernel_variant << "\n";
    f << "total_seconds=" << fmt17(trace.total_seconds) << "\n";
  }
}

RunTrace read_trace(const std::filesystem::path &dir)
{
  const auto summary_path = dir / "summary.txt";
  std::ifstream sf(summary_path);
  if (!sf)
  {
    throw IoError("read_trace: cannot open " + summary_path.string());
  }
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(sf, line))
  {
    const auto eq = line.find('=');
    if (eq != std::string::npos)
    {
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  RunTrace trace;
  if (!kv.count("solver"))
  {
    throw ValidationError("read_trace: summary.txt lacks a solver entry");
  }
  trace.config.solver = solver_from_name(kv["solver"]);
  trace.converged = kv["converged"] == "true";
  if (kv.count("outer_iterations"))
  {
    trace.outer_iterations = std::stoll(kv["outer_iterations"]);
  }
  if (kv.count("seed"))
  {
    trace.config.seed = std::stoull(kv["seed"]);
  }
  trace.kernel_variant = kv.count("kernel_variant") ? kv["kernel_variant"] : "";

  std::ifstream lf(dir / "ledger.csv");
  if (!lf)
  {
    throw IoError("read_trace: cannot open " + (dir / "ledger.csv").string());
  }
  std::getline(lf, line); // header
  while (std::getline(lf, line))
  {
    if (line.empty())
    {
      continue;
    }
    std::istringstream ls(line);
    std::string order_s, idx_s, point_s;
    if (!std::getline(ls, order_s, ',') || !std::getline(ls, idx_s, ',') || !std::getline(ls, point_s, ','))
    {
      throw ValidationError("read_trace: malformed ledger.csv line");
    }
    LedgerEntry e;
    e.order = std::stoll(order_s);
    e.point_index = std::stoll(idx_s);
    e.point = std::stod(point_s);
    e.solve_record = static_cast<std::int64_t>(trace.solve_records.size());
    SolveRecord rec;
    rec.point_index = e.point_index;
    rec.point = e.point;
    const std::size_t j = trace.final_ledger.size();
    rec.X = read_mm_dense(dir / ("ledger_X_" + std::to_string(j) + ".mtx"));
    rec.eta = read_mm_dense(dir / ("ledger_eta_" + std::to_string(j) + ".mtx"));
    trace.solve_records.push_back(std::move(rec));
    trace.final_ledger.push_back(e);
  }
  for (std::size_t j = 0;; ++j)
  {
    const auto p = dir / ("basis_" + std::to_string(j) + ".mtx");
    if (!std::filesystem::exists(p))
    {
      break;
    }
    trace.final_basis_blocks.push_back(read_mm_dense(p));
  }
  return trace;
}

void write_reduced(const std::filesystem::path &dir, const ReducedSystem &rs)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_mm_dense(dir / "Mh.mtx", rs.Mh);
  write_mm_dense(dir / "Dh.mtx", rs.Dh);
  write_mm_dense(dir / "Kh.mtx", rs.Kh);
  write_mm_dense(dir / "Fh.mtx", rs.Fh);
  write_mm_dense(dir / "Cph.mtx", rs.Cph);
  write_mm_dense(dir / "Cvh.mtx", rs.Cvh);
  write_mm_dense(dir / "basis.mtx", rs.basis);
  std::ofstream man(dir / "manifest.txt");
  man << "r=" << rs.r << "\n";
  man << "alpha=" << fmt17(rs.alpha) << "\n";
  man << "beta=" << fmt17(rs.beta) << "\n";
}

ReducedSystem read_reduced(const std::filesystem::path &dir)
{
  const auto need = [&](const char *name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p))
    {
      throw IoError("read_reduced: missing file " + p.string());
    }
    return p;
  };
  ReducedSystem rs;
  rs.Mh = read_mm_dense(need("Mh.mtx"));
  rs.Dh = read_mm_dense(need("Dh.mtx"));
  rs.Kh = read_mm_dense(need("Kh.mtx"));
  rs.Fh = read_mm_dense(need("Fh.mtx"));
  rs.Cph = read_mm_dense(need("Cph.mtx"));
  rs.Cvh = read_mm_dense(need("Cvh.mtx"));
  if (std::filesystem::exists(dir / "basis.mtx"))
  {
    rs.basis = read_mm_dense(dir / "basis.mtx");
  }
  rs.r = rs.Mh.nrows;
  std::ifstream man(dir / "manifest.txt");
  std::string line;
  while (man && std::getline(man, line))
  {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
      continue;
    }
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "alpha")
    {
      rs.alpha = std::stod(val);
    }
    else if (key == "beta")
    {
      rs.beta = std::stod(val);
    }
  }
  if (rs.Dh.nrows != rs.r || rs.Kh.nrows != rs.r || rs.Fh.nrows != rs.r || rs.Cph.ncols != rs.r)
  {
    throw ValidationError("read_reduced: inconsistent dimensions in " + dir.string());
  }
  return rs;
}

} // namespace mor
