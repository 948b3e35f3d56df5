// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mor/dense.hpp"

namespace mor
{

struct LinearOperator
{
  std::function<std::vector<double>(std::span<const double>)> apply;
  std::int64_t dim = 0;

  static LinearOperator identity(std::int64_t n);
  static LinearOperator from_sparse(const SparseMatrix &A);
};

struct SolveReport
{
  std::vector<double> solution;
  std::vector<double> residual;            // b - A(solution), recomputed at exit
  std::vector<double> recurrence_residual; // final CG recurrence residual
  std::int64_t iterations = 0;
  bool converged = false;
  std::vector<double> relres_history; // recurrence ||r_k|| / ||b|| per iteration
};

/// Conjugate gradient on the right-preconditioned operator A P (x0 = 0): CG
/// solves (A P) xt = b, then solution = P(xt). Convergence requires the true
/// residual ||b - A(P xt))|| <= rtol ||b||; the recurrence test triggers the
/// check and the iteration restarts from the current iterate when the two
/// disagree. A zero right-hand side returns instantly. Breakdown (curvature
/// <= 1e-30 ||d||^2) throws BreakdownError; running out of maxit returns
/// converged = false.
SolveReport pcg_solve(const LinearOperator &A, const LinearOperator &P, std::span<const double> b, double rtol,
                      std::int64_t maxit);

struct BlockSolveResult
{
  DenseMatrix X;                    // solutions, one per column of B
  DenseMatrix recurrence_residuals; // n x m, ledger block
  DenseMatrix true_residuals;       // n x m
  std::vector<std::int64_t> iterations;
  bool all_converged = true;
};

/// Column-by-column pcg_solve over the right-hand-side block B. Errors from a
/// column are rethrown tagged with the column index.
BlockSolveResult block_solve(const LinearOperator &A, const LinearOperator &P, const DenseMatrix &B, double rtol,
                             std::int64_t maxit);

} // namespace mor
