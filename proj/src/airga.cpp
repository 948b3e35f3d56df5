// SPDX-License-Identifier: Apache-2.0

#include "mor/airga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mor/cplx.hpp"
#include "mor/eigen.hpp"
#include "mor/errors.hpp"
#include "mor/kernels.hpp"

namespace mor
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Rethrows the active exception with a context prefix, preserving the types
// the callers distinguish.
[[noreturn]] void rethrow_with_context(const std::string &ctx)
{
  try
  {
    throw;
  }
  catch (const StagnationError &e)
  {
    throw StagnationError(ctx + ": " + e.what(), e.column);
  }
  catch (const BreakdownError &e)
  {
    throw BreakdownError(ctx + ": " + e.what(), e.iteration);
  }
  catch (const SingularMatrixError &e)
  {
    throw SingularMatrixError(ctx + ": " + e.what(), e.pivot);
  }
  catch (const StabilityError &e)
  {
    throw StabilityError(ctx + ": " + e.what(), e.eigenvalues);
  }
  catch (const ConvergenceError &e)
  {
    throw ConvergenceError(ctx + ": " + e.what());
  }
  catch (const NumericalError &e)
  {
    throw NumericalError(ctx + ": " + e.what());
  }
  catch (const std::exception &e)
  {
    throw std::runtime_error(ctx + ": " + e.what());
  }
}

class DirectBackend final : public SolveBackend
{
public:
  void prepare(const SecondOrderSystem &sys, const std::vector<double> &points, std::int64_t /*outer*/,
               std::vector<PrecondRecord> * /*records*/) override
  {
    ops_.clear();
    lus_.clear();
    for (const double s : points)
    {
      ops_.push_back(shifted_operator(sys, s));
      lus_.push_back(DenseLu::factor(sparse_to_dense(ops_.back())));
    }
  }

  BlockSolveResult solve(std::int64_t point_index, const DenseMatrix &rhs) override
  {
    BlockSolveResult out;
    out.X = lus_.at(static_cast<std::size_t>(point_index)).solve(rhs);
    out.recurrence_residuals = DenseMatrix(rhs.nrows, rhs.ncols);
    const DenseMatrix KX = sparse_times_dense(ops_.at(static_cast<std::size_t>(point_index)), out.X);
    out.true_residuals = DenseMatrix(rhs.nrows, rhs.ncols);
    for (std::size_t k = 0; k < out.true_residuals.values.size(); ++k)
    {
      out.true_residuals.values[k] = rhs.values[k] - KX.values[k];
    }
    out.iterations.assign(static_cast<std::size_t>(rhs.ncols), 0);
    return out;
  }

  bool provides_residuals() const override { return false; }

private:
  std::vector<SparseMatrix> ops_;
  std::vector<DenseLu> lus_;
};

class CgBackend final : public SolveBackend
{
public:
  explicit CgBackend(const AirgaConfig &cfg) : cfg_(cfg) {}

  void prepare(const SecondOrderSystem &sys, const std::vector<double> &points, std::int64_t outer,
               std::vector<PrecondRecord> *records) override
  {
    n_ = sys.order();
    std::vector<SparseMatrix> fresh;
    fresh.reserve(points.size());
    for (const double s : points)
    {
      fresh.push_back(shifted_operator(sys, s));
    }

    if (cfg_.solver == AirgaConfig::Solver::cg_plain)
    {
      chains_.assign(points.size(), PreconditionerChain{});
    }
    else
    {
      SpaiOptions opts;
      opts.tol = cfg_.spai_tol;
      opts.max_col_iters = cfg_.spai_max_col_iters;
      opts.mode = cfg_.spai_mode;
      const bool update_mode = cfg_.solver == AirgaConfig::Solver::cg_spai_update &&
                               outer >= cfg_.update_start_iteration && prev_ops_.size() == points.size() &&
                               chains_.size() == points.size();
      if (!update_mode)
      {
        chains_.assign(points.size(), PreconditionerChain{});
      }
      for (std::size_t i = 0; i < points.size(); ++i)
      {
        PrecondRecord rec;
        rec.outer = outer;
        rec.point_index = static_cast<std::int64_t>(i);
        rec.point = points[i];
        const auto t0 = Clock::now();
        if (update_mode)
        {
          SpaiFactor q = spai_update(prev_ops_[i], fresh[i], opts);
          rec.kind = SpaiFactor::Kind::update;
          chains_[i].push_newest(std::move(q));
        }
        else
        {
          SpaiFactor p = spai_build(fresh[i], opts);
          rec.kind = SpaiFactor::Kind::base;
          chains_[i].push_newest(std::move(p));
        }
        rec.seconds = seconds_since(t0);
        rec.chain_length = static_cast<std::int64_t>(chains_[i].factors.size());
        if (records != nullptr)
        {
          records->push_back(rec);
        }
      }
    }
    prev_ops_ = std::move(fresh);
  }

  BlockSolveResult solve(std::int64_t point_index, const DenseMatrix &rhs) override
  {
    const auto &K = prev_ops_.at(static_cast<std::size_t>(point_index));
    const LinearOperator A = LinearOperator::from_sparse(K);
    LinearOperator P;
    if (chains_.empty() || chains_.at(static_cast<std::size_t>(point_index)).empty())
    {
      P = LinearOperator::identity(n_);
    }
    else
    {
      const PreconditionerChain &chain = chains_[static_cast<std::size_t>(point_index)];
      P = LinearOperator{[&chain](std::span<const double> v) { return chain_apply(chain, v); }, n_};
    }
    return block_solve(A, P, rhs, cfg_.cg_rtol, cfg_.cg_maxit_factor * n_);
  }

  bool provides_residuals() const override { return true; }

private:
  AirgaConfig cfg_;
  std::int64_t n_ = 0;
  std::vector<SparseMatrix> prev_ops_; // operators of the prepared iteration
  std::vector<PreconditionerChain> chains_;
};

} // namespace

std::vector<cxd> reduced_transfer(const ReducedSystem &rs, cxd s)
{
  const std::int64_t r = rs.r;
  const std::int64_t m = rs.Fh.ncols;
  const std::int64_t q = rs.Cph.nrows;
  std::vector<cxd> A(static_cast<std::size_t>(r * r));
  const cxd s2 = s * s;
  for (std::int64_t j = 0; j < r; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      A[static_cast<std::size_t>(j * r + i)] = s2 * rs.Mh.at(i, j) + s * rs.Dh.at(i, j) + rs.Kh.at(i, j);
    }
  }
  const ZDenseLu lu = ZDenseLu::factor(std::move(A), r);
  std::vector<cxd> H(static_cast<std::size_t>(q * m), cxd(0.0, 0.0));
  std::vector<cxd> x(static_cast<std::size_t>(r));
  for (std::int64_t j = 0; j < m; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      x[static_cast<std::size_t>(i)] = cxd(rs.Fh.at(i, j), 0.0);
    }
    lu.solve_in_place(x.data());
    for (std::int64_t t = 0; t < q; ++t)
    {
      cxd acc(0.0, 0.0);
      for (std::int64_t i = 0; i < r; ++i)
      {
        acc += (cxd(rs.Cph.at(t, i), 0.0) + s * rs.Cvh.at(t, i)) * x[static_cast<std::size_t>(i)];
      }
      H[static_cast<std::size_t>(j * q + t)] = acc;
    }
  }
  return H;
}

namespace
{

struct FirstOrder
{
  DenseMatrix A, B, C;
};

FirstOrder to_first_order(const ReducedSystem &rs)
{
  const std::int64_t r = rs.r;
  const std::int64_t m = rs.Fh.ncols;
  const std::int64_t q = rs.Cph.nrows;
  DenseMatrix rhs(r, r + m);
  for (std::int64_t j = 0; j < r; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      rhs.at(i, j) = rs.Kh.at(i, j);
    }
  }
  for (std::int64_t j = 0; j < m; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      rhs.at(i, r + j) = rs.Fh.at(i, j);
    }
  }
  DenseMatrix rhs2(r, r);
  for (std::int64_t j = 0; j < r; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      rhs2.at(i, j) = rs.Dh.at(i, j);
    }
  }
  const DenseLu lu = DenseLu::factor(rs.Mh);
  const DenseMatrix KF = lu.solve(rhs);  // [Mh^{-1} Kh, Mh^{-1} Fh]
  const DenseMatrix Dm = lu.solve(rhs2); // Mh^{-1} Dh

  FirstOrder fo;
  fo.A = DenseMatrix(2 * r, 2 * r);
  for (std::int64_t j = 0; j < r; ++j)
  {
    fo.A.at(j, r + j) = 1.0;
    for (std::int64_t i = 0; i < r; ++i)
    {
      fo.A.at(r + i, j) = -KF.at(i, j);
      fo.A.at(r + i, r + j) = -Dm.at(i, j);
    }
  }
  fo.B = DenseMatrix(2 * r, m);
  for (std::int64_t j = 0; j < m; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      fo.B.at(r + i, j) = KF.at(i, r + j);
    }
  }
  fo.C = DenseMatrix(q, 2 * r);
  for (std::int64_t i = 0; i < q; ++i)
  {
    for (std::int64_t j = 0; j < r; ++j)
    {
      fo.C.at(i, j) = rs.Cph.at(i, j);
      fo.C.at(i, r + j) = rs.Cvh.at(i, j);
    }
  }
  return fo;
}

double h2_of_first_order(const FirstOrder &fo)
{
  DenseMatrix BBt(fo.A.nrows, fo.A.nrows);
  for (std::int64_t j = 0; j < fo.B.ncols; ++j)
  {
    for (std::int64_t a = 0; a < fo.A.nrows; ++a)
    {
      const double ba = fo.B.at(a, j);
      if (ba == 0.0)
      {
        continue;
      }
      for (std::int64_t b = 0; b < fo.A.nrows; ++b)
      {
        BBt.at(b, a) += fo.B.at(b, j) * ba;
      }
    }
  }
  const DenseMatrix P = lyap_solve(fo.A, BBt);
  const DenseMatrix CP = matmul(fo.C, P);
  double acc = 0.0;
  for (std::int64_t i = 0; i < fo.C.nrows; ++i)
  {
    for (std::int64_t j = 0; j < fo.C.ncols; ++j)
    {
      acc += CP.at(i, j) * fo.C.at(i, j);
    }
  }
  return std::sqrt(std::max(0.0, acc));
}

double quad_hint(const ReducedSystem &rs)
{
  const double mk = frob_norm(rs.Kh);
  const double mm = std::max(frob_norm(rs.Mh), 1e-300);
  return 2.0 * std::sqrt(mk / mm) + 1.0;
}

} // namespace

const char *solver_name(AirgaConfig::Solver s)
{
  switch (s)
  {
    case AirgaConfig::Solver::direct:
      return "direct";
    case AirgaConfig::Solver::cg_plain:
      return "cg";
    case AirgaConfig::Solver::cg_spai:
      return "cg-spai";
    case AirgaConfig::Solver::cg_spai_update:
      return "cg-spai-update";
  }
  return "unknown";
}

std::unique_ptr<SolveBackend> make_backend(const AirgaConfig &cfg)
{
  if (cfg.solver == AirgaConfig::Solver::direct)
  {
    return std::make_unique<DirectBackend>();
  }
  return std::make_unique<CgBackend>(cfg);
}

ZerothResult zeroth_moments(const SecondOrderSystem &sys, const ExpansionPointSet &pts, SolveBackend &backend)
{
  if (pts.points.empty())
  {
    throw ArgumentError("zeroth_moments: empty expansion point set");
  }
  ZerothResult out;
  for (std::size_t i = 0; i < pts.points.size(); ++i)
  {
    const auto t0 = Clock::now();
    BlockSolveResult sol;
    try
    {
      sol = backend.solve(static_cast<std::int64_t>(i), sys.F);
    }
    catch (...)
    {
      rethrow_with_context("zeroth moment at point index " + std::to_string(i));
    }
    SolveRecord rec;
    rec.inner = 0;
    rec.point_index = static_cast<std::int64_t>(i);
    rec.point = pts.points[i];
    rec.solve_seconds = seconds_since(t0);
    for (const std::int64_t c : sol.iterations)
    {
      rec.cg_iterations += c;
    }
    rec.converged = sol.all_converged;
    rec.X = sol.X;
    rec.eta = std::move(sol.recurrence_residuals);

    MomentBlock blk;
    blk.point_index = static_cast<std::int64_t>(i);
    blk.order = 0;
    blk.data = thin_qr(sol.X).Q;
    out.blocks.push_back(std::move(blk));
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::int64_t select_point(std::span<const double> moment_errors)
{
  if (moment_errors.empty())
  {
    throw ArgumentError("select_point: empty error array");
  }
  std::int64_t best = 0;
  for (std::size_t i = 0; i < moment_errors.size(); ++i)
  {
    if (!std::isfinite(moment_errors[i]))
    {
      throw NumericalError("select_point: non-finite moment error");
    }
    if (moment_errors[i] > moment_errors[static_cast<std::size_t>(best)])
    {
      best = static_cast<std::int64_t>(i);
    }
  }
  return best;
}

MomentResult next_moment(const SecondOrderSystem &sys, std::int64_t point_index, double point, const DenseMatrix &Vj,
                         SolveBackend &backend)
{
  DenseMatrix rhs = sparse_times_dense(sys.M, Vj);
  for (double &v : rhs.values)
  {
    v = -v;
  }
  const auto t0 = Clock::now();
  BlockSolveResult sol = backend.solve(point_index, rhs);
  MomentResult out;
  out.record.point_index = point_index;
  out.record.point = point;
  out.record.solve_seconds = seconds_since(t0);
  for (const std::int64_t c : sol.iterations)
  {
    out.record.cg_iterations += c;
  }
  out.record.converged = sol.all_converged;
  out.record.X = sol.X;
  out.record.eta = std::move(sol.recurrence_residuals);
  out.block.point_index = point_index;
  out.block.data = std::move(sol.X);
  return out;
}

std::vector<double> arnoldi_deflate(DenseMatrix &X, std::span<const DenseMatrix> basis_blocks)
{
  std::vector<double> gammas(basis_blocks.size(), 0.0);
  const auto &ops = kernels::active();
  for (int sweep = 0; sweep < 2; ++sweep)
  {
    for (std::size_t t = 0; t < basis_blocks.size(); ++t)
    {
      const double g = trace_inner(basis_blocks[t], X);
      if (g != 0.0)
      {
        ops.axpy(X.values.size(), -g, basis_blocks[t].values.data(), X.values.data());
      }
      gammas[t] += g;
    }
  }
  return gammas;
}

std::vector<double> moment_error_estimates(std::span<const MomentBlock> blocks)
{
  std::vector<double> errs(blocks.size(), 0.0);
  for (std::size_t i = 0; i < blocks.size(); ++i)
  {
    errs[i] = frob_norm(blocks[i].data);
  }
  return errs;
}

ReducedSystem project_reduce(const SecondOrderSystem &sys, const OrthonormalBasis &basis)
{
  const DenseMatrix &V = basis.assembled;
  ReducedSystem rs;
  rs.Mh = matmul_tn(V, sparse_times_dense(sys.M, V));
  rs.Dh = matmul_tn(V, sparse_times_dense(sys.D, V));
  rs.Kh = matmul_tn(V, sparse_times_dense(sys.K, V));
  rs.Fh = matmul_tn(V, sys.F);
  rs.Cph = matmul(sys.Cp, V);
  rs.Cvh = matmul(sys.Cv, V);
  rs.basis = V;
  rs.r = V.ncols;
  rs.alpha = sys.alpha;
  rs.beta = sys.beta;
  return rs;
}

double h2_norm(const ReducedSystem &rs, AirgaConfig::H2Method method, bool *used_fallback)
{
  if (used_fallback != nullptr)
  {
    *used_fallback = false;
  }
  if (method == AirgaConfig::H2Method::lyapunov)
  {
    try
    {
      return h2_of_first_order(to_first_order(rs));
    }
    catch (const StabilityError &)
    {
      if (used_fallback != nullptr)
      {
        *used_fallback = true;
      }
    }
  }
  const auto density = [&rs](double w) {
    double acc = 0.0;
    for (const cxd &h : reduced_transfer(rs, cxd(0.0, w)))
    {
      acc += std::norm(h);
    }
    return acc;
  };
  return h2_from_density(density, quad_hint(rs));
}

double h2_distance(const ReducedSystem &a, const ReducedSystem &b, AirgaConfig::H2Method method, bool *used_fallback)
{
  if (used_fallback != nullptr)
  {
    *used_fallback = false;
  }
  if (method == AirgaConfig::H2Method::lyapunov)
  {
    try
    {
      const FirstOrder fa = to_first_order(a);
      const FirstOrder fb = to_first_order(b);
      const std::int64_t na = fa.A.nrows, nb = fb.A.nrows;
      FirstOrder diff;
      diff.A = DenseMatrix(na + nb, na + nb);
      for (std::int64_t j = 0; j < na; ++j)
      {
        for (std::int64_t i = 0; i < na; ++i)
        {
          diff.A.at(i, j) = fa.A.at(i, j);
        }
      }
      for (std::int64_t j = 0; j < nb; ++j)
      {
        for (std::int64_t i = 0; i < nb; ++i)
        {
          diff.A.at(na + i, na + j) = fb.A.at(i, j);
        }
      }
      diff.B = DenseMatrix(na + nb, fa.B.ncols);
      for (std::int64_t j = 0; j < fa.B.ncols; ++j)
      {
        for (std::int64_t i = 0; i < na; ++i)
        {
          diff.B.at(i, j) = fa.B.at(i, j);
        }
        for (std::int64_t i = 0; i < nb; ++i)
        {
          diff.B.at(na + i, j) = fb.B.at(i, j);
        }
      }
      diff.C = DenseMatrix(fa.C.nrows, na + nb);
      for (std::int64_t i = 0; i < fa.C.nrows; ++i)
      {
        for (std::int64_t j = 0; j < na; ++j)
        {
          diff.C.at(i, j) = fa.C.at(i, j);
        }
        for (std::int64_t j = 0; j < nb; ++j)
        {
          diff.C.at(i, na + j) = -fb.C.at(i, j);
        }
      }
      return h2_of_first_order(diff);
    }
    catch (const StabilityError &)
    {
      if (used_fallback != nullptr)
      {
        *used_fallback = true;
      }
    }
  }
  const auto density = [&a, &b](double w) {
    const auto ha = reduced_transfer(a, cxd(0.0, w));
    const auto hb = reduced_transfer(b, cxd(0.0, w));
    double acc = 0.0;
    for (std::size_t k = 0; k < ha.size(); ++k)
    {
      acc += std::norm(ha[k] - hb[k]);
    }
    return acc;
  };
  return h2_from_density(density, std::max(quad_hint(a), quad_hint(b)));
}

ExpansionPointSet refresh_points(const ReducedSystem &rs, std::int64_t l, const ExpansionPointSet &previous)
{
  const Spectrum sp = quad_eig(rs.Mh, rs.Dh, rs.Kh);

  std::vector<double> candidates;
  bool any_complex = false;
  for (const auto &[re, im] : sp.eigenvalues)
  {
    if (im != 0.0)
    {
      any_complex = true;
      break;
    }
  }
  for (const auto &[re, im] : sp.eigenvalues)
  {
    if (any_complex && im == 0.0)
    {
      continue; // adaptive protocol: real parts of the complex pairs
    }
    const double mag = std::hypot(re, im);
    const double v = std::abs(re);
    if (v > 1e-8 * mag)
    {
      candidates.push_back(v);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  ExpansionPointSet out;
  out.origin = ExpansionPointSet::Origin::quad_eig;
  for (const double v : candidates)
  {
    if (!out.points.empty())
    {
      const double last = out.points.back();
      if (v - last <= 1e-8 * std::max(v, last))
      {
        continue; // deduplicate within relative gap
      }
    }
    out.points.push_back(v);
    if (static_cast<std::int64_t>(out.points.size()) == l)
    {
      break;
    }
  }

  if (static_cast<std::int64_t>(out.points.size()) < l)
  {
    out.padded = true;
    for (const double p : previous.points)
    {
      bool dup = false;
      for (const double v : out.points)
      {
        if (std::abs(p - v) <= 1e-8 * std::max(std::abs(p), std::abs(v)))
        {
          dup = true;
          break;
        }
      }
      if (!dup)
      {
        out.points.push_back(p);
        if (static_cast<std::int64_t>(out.points.size()) == l)
        {
          break;
        }
      }
    }
    std::sort(out.points.begin(), out.points.end());
  }
  if (out.points.empty())
  {
    throw NumericalError("refresh_points: no usable expansion points");
  }
  return out;
}

AirgaResult airga_run(const SecondOrderSystem &sys, const AirgaConfig &cfg)
{
  sys.validate();
  const std::int64_t n = sys.order();
  const std::int64_t m = sys.inputs();
  if (cfg.r_max < m)
  {
    throw ArgumentError("airga_run: r_max must be at least the input count");
  }
  if (!(cfg.outer_tol > 0.0) || !(cfg.inner_tol > 0.0))
  {
    throw ArgumentError("airga_run: tolerances must be positive");
  }
  if (cfg.initial_points.points.empty())
  {
    throw ArgumentError("airga_run: no initial expansion points");
  }

  const auto t_start = Clock::now();
  AirgaResult result;
  RunTrace &trace = result.trace;
  trace.config = cfg;
  trace.kernel_variant = kernels::variant_name(kernels::active_variant());

  auto backend = make_backend(cfg);
  ExpansionPointSet pts = cfg.initial_points;
  const std::int64_t jceil = (cfg.r_max + m - 1) / m; // ceil(r_max / m)

  std::optional<ReducedSystem> prev;
  bool have_result = false;

  for (std::int64_t z = 1; z <= cfg.max_outer; ++z)
  {
    OuterRecord orec;
    orec.outer = z;
    orec.points = pts.points;
    orec.points_padded = pts.padded;

    try
    {
      backend->prepare(sys, pts.points, z, &trace.precond_records);
    }
    catch (...)
    {
      rethrow_with_context("airga: outer z=" + std::to_string(z) + " preconditioner setup");
    }

    // Lines 4-6: zeroth moments at every point, QR-orthonormalized.
    ZerothResult zr;
    try
    {
      zr = zeroth_moments(sys, pts, *backend);
    }
    catch (...)
    {
      rethrow_with_context("airga: outer z=" + std::to_string(z) + " inner j=0");
    }
    std::vector<MomentBlock> blocks = std::move(zr.blocks);
    std::vector<std::int64_t> block_origin(blocks.size());
    for (std::size_t i = 0; i < zr.records.size(); ++i)
    {
      zr.records[i].outer = z;
      block_origin[i] = static_cast<std::int64_t>(trace.solve_records.size());
      trace.solve_records.push_back(std::move(zr.records[i]));
    }

    double block_scale = 0.0;
    for (const auto &b : blocks)
    {
      block_scale = std::max(block_scale, frob_norm(b.data));
    }
    const double floor = 1e-14 * std::max(block_scale, 1.0);

    std::vector<DenseMatrix> V;
    std::vector<LedgerEntry> ledger;
    std::optional<ReducedSystem> inner_prev;

    // Inner loop bodies j = 1 .. jceil-1; the final block after the loop
    // brings the total to J <= jceil.
    for (std::int64_t j = 1; j <= jceil - 1; ++j)
    {
      const std::vector<double> errs = moment_error_estimates(blocks);
      const std::int64_t sel = select_point(errs);
      const double selnorm = errs[static_cast<std::size_t>(sel)];
      if (selnorm <= floor)
      {
        break; // nothing new to add: the Krylov space is exhausted
      }

      DenseMatrix Vj = blocks[static_cast<std::size_t>(sel)].data;
      kernels::active().scal(Vj.values.size(), 1.0 / selnorm, Vj.values.data());
      ledger.push_back({static_cast<std::int64_t>(V.size()), sel, pts.points[static_cast<std::size_t>(sel)],
                        block_origin[static_cast<std::size_t>(sel)]});
      V.push_back(Vj);

      MomentResult mr;
      try
      {
        mr = next_moment(sys, sel, pts.points[static_cast<std::size_t>(sel)], Vj, *backend);
      }
      catch (...)
      {
        rethrow_with_context("airga: outer z=" + std::to_string(z) + " inner j=" + std::to_string(j) +
                             " point i=" + std::to_string(sel));
      }
      mr.record.outer = z;
      mr.record.inner = j;
      mr.block.order = j;
      block_origin[static_cast<std::size_t>(sel)] = static_cast<std::int64_t>(trace.solve_records.size());
      trace.solve_records.push_back(std::move(mr.record));
      blocks[static_cast<std::size_t>(sel)] = std::move(mr.block);

      for (auto &blk : blocks)
      {
        arnoldi_deflate(blk.data, V);
      }

      // Lines 22-25: intermediate reduced system from the normalized
      // deflated blocks of all points.
      std::vector<DenseMatrix> Ws;
      for (const auto &blk : blocks)
      {
        const double nb = frob_norm(blk.data);
        if (nb > floor)
        {
          DenseMatrix w = blk.data;
          kernels::active().scal(w.values.size(), 1.0 / nb, w.values.data());
          Ws.push_back(std::move(w));
        }
      }
      if (!Ws.empty())
      {
        DenseMatrix Wt(n, static_cast<std::int64_t>(Ws.size()) * m);
        for (std::size_t b = 0; b < Ws.size(); ++b)
        {
          std::copy(Ws[b].values.begin(), Ws[b].values.end(),
                    Wt.values.begin() + static_cast<std::int64_t>(b) * n * m);
        }
        const QrResult qr = thin_qr(Wt);
        if (qr.rank > 0)
        {
          DenseMatrix Wq(n, qr.rank);
          std::int64_t c = 0;
          for (std::int64_t k = 0; k < qr.Q.ncols; ++k)
          {
            if (qr.R.at(k, k) > 0.0)
            {
              std::copy(qr.Q.col(k), qr.Q.col(k) + n, Wq.col(c));
              ++c;
            }
          }
          OrthonormalBasis wb;
          wb.blocks = Ws;
          wb.assembled = std::move(Wq);
          const ReducedSystem intermediate = project_reduce(sys, wb);
          if (inner_prev.has_value())
          {
            bool fb = false;
            double delta = 0.0;
            try
            {
              delta = h2_distance(intermediate, *inner_prev, cfg.h2_method, &fb);
            }
            catch (...)
            {
              rethrow_with_context("airga: outer z=" + std::to_string(z) + " inner j=" + std::to_string(j) +
                                   " intermediate H2");
            }
            orec.h2_used_quadrature_fallback |= fb;
            if (delta <= cfg.inner_tol)
            {
              inner_prev = intermediate;
              break;
            }
          }
          inner_prev = intermediate;
        }
      }
    }

    // Lines 28-30: final selection and block.
    {
      const std::vector<double> errs = moment_error_estimates(blocks);
      orec.moment_errors = errs;
      const std::int64_t sel = select_point(errs);
      const double selnorm = errs[static_cast<std::size_t>(sel)];
      if (selnorm > floor)
      {
        DenseMatrix Vj = blocks[static_cast<std::size_t>(sel)].data;
        kernels::active().scal(Vj.values.size(), 1.0 / selnorm, Vj.values.data());
        ledger.push_back({static_cast<std::int64_t>(V.size()), sel, pts.points[static_cast<std::size_t>(sel)],
                          block_origin[static_cast<std::size_t>(sel)]});
        V.push_back(std::move(Vj));
      }
    }
    if (V.empty())
    {
      throw NumericalError("airga: outer z=" + std::to_string(z) + " produced no basis directions");
    }
    const std::int64_t J = static_cast<std::int64_t>(V.size());
    orec.inner_steps = J;

    // Line 31: orthonormalize the concatenated blocks, dropping rank-deficient
    // columns, then cap at r_max.
    const auto t_proj = Clock::now();
    DenseMatrix Vt(n, J * m);
    for (std::int64_t b = 0; b < J; ++b)
    {
      std::copy(V[static_cast<std::size_t>(b)].values.begin(), V[static_cast<std::size_t>(b)].values.end(),
                Vt.values.begin() + b * n * m);
    }
    const QrResult qr = thin_qr(Vt);
    const std::int64_t r = std::min<std::int64_t>(qr.rank, cfg.r_max);
    if (r == 0)
    {
      throw NumericalError("airga: outer z=" + std::to_string(z) + " basis has rank zero");
    }
    OrthonormalBasis basis;
    basis.blocks = V;
    basis.assembled = DenseMatrix(n, r);
    {
      std::int64_t c = 0;
      for (std::int64_t k = 0; k < qr.Q.ncols && c < r; ++k)
      {
        if (qr.R.at(k, k) > 0.0)
        {
          std::copy(qr.Q.col(k), qr.Q.col(k) + n, basis.assembled.col(c));
          ++c;
        }
      }
    }
    ReducedSystem reduced = project_reduce(sys, basis);
    orec.projection_seconds = seconds_since(t_proj);
    orec.r = reduced.r;

    // Line 33: new expansion points from the reduced quadratic eigenproblem.
    ExpansionPointSet next_pts;
    try
    {
      next_pts = refresh_points(reduced, pts.count(), pts);
    }
    catch (...)
    {
      rethrow_with_context("airga: outer z=" + std::to_string(z) + " expansion point refresh");
    }

    double delta = std::numeric_limits<double>::infinity();
    if (prev.has_value())
    {
      bool fb = false;
      try
      {
        delta = h2_distance(reduced, *prev, cfg.h2_method, &fb);
      }
      catch (...)
      {
        rethrow_with_context("airga: outer z=" + std::to_string(z) + " convergence H2");
      }
      orec.h2_used_quadrature_fallback |= fb;
    }
    orec.h2_delta = delta;
    trace.outer_records.push_back(std::move(orec));
    trace.final_ledger = std::move(ledger);
    trace.final_basis_blocks = basis.blocks;
    trace.outer_iterations = z;

    prev = reduced;
    result.reduced = std::move(reduced);
    have_result = true;

    if (delta <= cfg.outer_tol)
    {
      trace.converged = true;
      break;
    }
    pts = next_pts;
  }

  if (!have_result)
  {
    throw ConvergenceError("airga: no outer iteration completed");
  }
  trace.total_seconds = seconds_since(t_start);
  return result;
}

} // namespace mor
