// SPDX-License-Identifier: Apache-2.0

#include "mor/krylov.hpp"

#include <cmath>

#include "mor/errors.hpp"
#include "mor/kernels.hpp"
#include "mor/sparse.hpp"

namespace mor
{

LinearOperator LinearOperator::identity(std::int64_t n)
{
  return {[](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); }, n};
}

LinearOperator LinearOperator::from_sparse(const SparseMatrix &A)
{
  if (A.nrows != A.ncols)
  {
    throw ArgumentError("LinearOperator::from_sparse: matrix must be square");
  }
  return {[&A](std::span<const double> v) { return spmv(A, v); }, A.nrows};
}

SolveReport pcg_solve(const LinearOperator &A, const LinearOperator &P, std::span<const double> b, double rtol,
                      std::int64_t maxit)
{
  const std::int64_t n = A.dim;
  if (P.dim != n || static_cast<std::int64_t>(b.size()) != n)
  {
    throw ArgumentError("pcg_solve: dimension mismatch");
  }
  if (!(rtol > 0.0))
  {
    throw ArgumentError("pcg_solve: rtol must be positive");
  }
  const auto &ops = kernels::active();

  SolveReport rep;
  const double bnorm = std::sqrt(ops.dot(b.data(), b.data(), b.size()));
  if (bnorm == 0.0)
  {
    rep.solution.assign(static_cast<std::size_t>(n), 0.0);
    rep.residual.assign(static_cast<std::size_t>(n), 0.0);
    rep.recurrence_residual.assign(static_cast<std::size_t>(n), 0.0);
    rep.converged = true;
    return rep;
  }
  const double target = rtol * bnorm;

  // CG on the composed operator, xt0 = 0 so r0 = b.
  std::vector<double> xt(static_cast<std::size_t>(n), 0.0);
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> d = r;
  double rho = ops.dot(r.data(), r.data(), r.size());
  std::int64_t it = 0;

  const auto apply_op = [&](const std::vector<double> &v) { return A.apply(P.apply(v)); };
  const auto finish = [&](bool converged) {
    rep.solution = P.apply(xt);
    const std::vector<double> ax = A.apply(rep.solution);
    rep.residual.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
    {
      rep.residual[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
    }
    rep.recurrence_residual = r;
    rep.iterations = it;
    rep.converged = converged;
  };

  while (it < maxit)
  {
    if (std::sqrt(rho) <= target)
    {
      // Recurrence says done; confirm against the true residual and restart
      // the recurrence from the current iterate when it disagrees.
      const std::vector<double> sol = P.apply(xt);
      std::vector<double> ax = A.apply(sol);
      for (std::int64_t i = 0; i < n; ++i)
      {
        ax[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
      }
      const double true_norm = std::sqrt(ops.dot(ax.data(), ax.data(), ax.size()));
      if (true_norm <= target)
      {
        finish(true);
        return rep;
      }
      // Restart: make the recurrence residual consistent with the true one
      // (of the composed system, which shares the residual b - A P xt).
      r = std::move(ax);
      d = r;
      rho = ops.dot(r.data(), r.data(), r.size());
      if (std::sqrt(rho) <= target)
      {
        finish(true);
        return rep;
      }
    }

    const std::vector<double> w = apply_op(d);
    const double curvature = ops.dot(d.data(), w.data(), d.size());
    const double dd = ops.dot(d.data(), d.data(), d.size());
    if (!(curvature > 1e-30 * dd))
    {
      throw BreakdownError("pcg_solve: direction curvature breakdown at iteration " + std::to_string(it), it);
    }
    const double alpha = rho / curvature;
    ops.axpy(xt.size(), alpha, d.data(), xt.data());
    ops.axpy(r.size(), -alpha, w.data(), r.data());
    ++it;
    const double rho_next = ops.dot(r.data(), r.data(), r.size());
    rep.relres_history.push_back(std::sqrt(rho_next) / bnorm);
    const double betak = rho_next / rho;
    rho = rho_next;
    for (std::int64_t i = 0; i < n; ++i)
    {
      d[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] + betak * d[static_cast<std::size_t>(i)];
    }
  }

  // Budget exhausted: one last confirmation so a drifted recurrence cannot
  // hide an actually-converged solve.
  {
    const std::vector<double> sol = P.apply(xt);
    std::vector<double> ax = A.apply(sol);
    for (std::int64_t i = 0; i < n; ++i)
    {
      ax[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
    }
    const double true_norm = std::sqrt(ops.dot(ax.data(), ax.data(), ax.size()));
    finish(true_norm <= target);
  }
  return rep;
}

BlockSolveResult block_solve(const LinearOperator &A, const LinearOperator &P, const DenseMatrix &B, double rtol,
                             std::int64_t maxit)
{
  if (B.nrows != A.dim)
  {
    throw ArgumentError("block_solve: right-hand-side rows do not match the operator dimension");
  }
  BlockSolveResult out;
  out.X = DenseMatrix(B.nrows, B.ncols);
  out.recurrence_residuals = DenseMatrix(B.nrows, B.ncols);
  out.true_residuals = DenseMatrix(B.nrows, B.ncols);
  out.iterations.resize(static_cast<std::size_t>(B.ncols), 0);
  for (std::int64_t j = 0; j < B.ncols; ++j)
  {
    SolveReport rep;
    try
    {
      rep = pcg_solve(A, P, B.col_span(j), rtol, maxit);
    }
    catch (const BreakdownError &e)
    {
      throw BreakdownError("block_solve: column " + std::to_string(j) + ": " + e.what(), e.iteration);
    }
    for (std::int64_t i = 0; i < B.nrows; ++i)
    {
      out.X.at(i, j) = rep.solution[static_cast<std::size_t>(i)];
      out.recurrence_residuals.at(i, j) = rep.recurrence_residual[static_cast<std::size_t>(i)];
      out.true_residuals.at(i, j) = rep.residual[static_cast<std::size_t>(i)];
    }
    out.iterations[static_cast<std::size_t>(j)] = rep.iterations;
    out.all_converged = out.all_converged && rep.converged;
  }
  return out;
}

} // namespace mor
