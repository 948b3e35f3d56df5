// SPDX-License-Identifier: Apache-2.0

#include "mor/dense.hpp"

#include <algorithm>
#include <cmath>

#include "mor/errors.hpp"
#include "mor/kernels.hpp"
#include "mor/sparse.hpp"

namespace mor
{

DenseMatrix DenseMatrix::identity(std::int64_t n)
{
  DenseMatrix I(n, n);
  for (std::int64_t i = 0; i < n; ++i)
  {
    I.at(i, i) = 1.0;
  }
  return I;
}

DenseMatrix DenseMatrix::from_column(std::span<const double> v)
{
  DenseMatrix A(static_cast<std::int64_t>(v.size()), 1);
  std::copy(v.begin(), v.end(), A.values.begin());
  return A;
}

double frob_norm(const DenseMatrix &A)
{
  const auto &ops = kernels::active();
  return std::sqrt(ops.dot(A.values.data(), A.values.data(), A.values.size()));
}

double trace_inner(const DenseMatrix &A, const DenseMatrix &B)
{
  if (A.nrows != B.nrows || A.ncols != B.ncols)
  {
    throw ArgumentError("trace_inner(dense): shape mismatch");
  }
  return kernels::active().dot(A.values.data(), B.values.data(), A.values.size());
}

DenseMatrix transpose(const DenseMatrix &A)
{
  DenseMatrix T(A.ncols, A.nrows);
  for (std::int64_t j = 0; j < A.ncols; ++j)
  {
    for (std::int64_t i = 0; i < A.nrows; ++i)
    {
      T.at(j, i) = A.at(i, j);
    }
  }
  return T;
}

DenseMatrix matmul(const DenseMatrix &A, const DenseMatrix &B)
{
  if (A.ncols != B.nrows)
  {
    throw ArgumentError("matmul: inner dimension mismatch");
  }
  const auto &ops = kernels::active();
  DenseMatrix C(A.nrows, B.ncols);
  for (std::int64_t j = 0; j < B.ncols; ++j)
  {
    double *cj = C.col(j);
    for (std::int64_t k = 0; k < A.ncols; ++k)
    {
      const double bkj = B.at(k, j);
      if (bkj != 0.0)
      {
        ops.axpy(static_cast<std::size_t>(A.nrows), bkj, A.col(k), cj);
      }
    }
  }
  return C;
}

DenseMatrix matmul_tn(const DenseMatrix &A, const DenseMatrix &B)
{
  if (A.nrows != B.nrows)
  {
    throw ArgumentError("matmul_tn: row dimension mismatch");
  }
  const auto &ops = kernels::active();
  DenseMatrix C(A.ncols, B.ncols);
  for (std::int64_t j = 0; j < B.ncols; ++j)
  {
    for (std::int64_t i = 0; i < A.ncols; ++i)
    {
      C.at(i, j) = ops.dot(A.col(i), B.col(j), static_cast<std::size_t>(A.nrows));
    }
  }
  return C;
}

std::vector<double> matvec(const DenseMatrix &A, std::span<const double> x)
{
  if (static_cast<std::int64_t>(x.size()) != A.ncols)
  {
    throw ArgumentError("matvec: dimension mismatch");
  }
  const auto &ops = kernels::active();
  std::vector<double> y(static_cast<std::size_t>(A.nrows), 0.0);
  for (std::int64_t j = 0; j < A.ncols; ++j)
  {
    if (x[static_cast<std::size_t>(j)] != 0.0)
    {
      ops.axpy(y.size(), x[static_cast<std::size_t>(j)], A.col(j), y.data());
    }
  }
  return y;
}

DenseMatrix dense_times_sparse(const DenseMatrix &A, const SparseMatrix &S)
{
  if (A.ncols != S.nrows)
  {
    throw ArgumentError("dense_times_sparse: inner dimension mismatch");
  }
  const auto &ops = kernels::active();
  DenseMatrix C(A.nrows, S.ncols);
  // (A S)(:, j) = sum_k A(:, k) S(k, j): walk S by rows, scatter into columns.
  for (std::int64_t k = 0; k < S.nrows; ++k)
  {
    for (std::int64_t p = S.row_ptr[static_cast<std::size_t>(k)]; p < S.row_ptr[static_cast<std::size_t>(k) + 1]; ++p)
    {
      const std::int64_t j = S.col_idx[static_cast<std::size_t>(p)];
      ops.axpy(static_cast<std::size_t>(A.nrows), S.values[static_cast<std::size_t>(p)], A.col(k), C.col(j));
    }
  }
  return C;
}

DenseMatrix sparse_times_dense(const SparseMatrix &S, const DenseMatrix &A)
{
  if (S.ncols != A.nrows)
  {
    throw ArgumentError("sparse_times_dense: inner dimension mismatch");
  }
  DenseMatrix C(S.nrows, A.ncols);
  for (std::int64_t j = 0; j < A.ncols; ++j)
  {
    spmv_into(S, A.col_span(j), {C.col(j), static_cast<std::size_t>(S.nrows)});
  }
  return C;
}

QrResult thin_qr(const DenseMatrix &A, double rank_tol)
{
  if (A.nrows < A.ncols)
  {
    throw ArgumentError("thin_qr: requires nrows >= ncols");
  }
  const std::int64_t m = A.nrows;
  const std::int64_t n = A.ncols;
  const auto &ops = kernels::active();
  const double anorm = frob_norm(A);
  const double tol = rank_tol * (anorm > 0.0 ? anorm : 1.0);

  DenseMatrix W = A; // accumulates Householder vectors below the diagonal
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  std::vector<double> tau(static_cast<std::size_t>(n), 0.0);

  for (std::int64_t k = 0; k < n; ++k)
  {
    double *x = W.col(k) + k;
    const std::size_t len = static_cast<std::size_t>(m - k);
    const double sigma = std::sqrt(ops.dot(x, x, len));
    if (sigma <= tol)
    {
      diag[static_cast<std::size_t>(k)] = 0.0;
      tau[static_cast<std::size_t>(k)] = 0.0;
      std::fill(x, x + len, 0.0);
      continue;
    }
    const double alpha = x[0] >= 0.0 ? -sigma : sigma;
    const double v0 = x[0] - alpha;
    x[0] = v0;
    const double vtv = ops.dot(x, x, len);
    tau[static_cast<std::size_t>(k)] = vtv > 0.0 ? 2.0 / vtv : 0.0;
    diag[static_cast<std::size_t>(k)] = alpha;
    for (std::int64_t j = k + 1; j < n; ++j)
    {
      double *y = W.col(j) + k;
      const double s = tau[static_cast<std::size_t>(k)] * ops.dot(x, y, len);
      ops.axpy(len, -s, x, y);
    }
  }

  QrResult out;
  out.R = DenseMatrix(n, n);
  for (std::int64_t k = 0; k < n; ++k)
  {
    for (std::int64_t i = 0; i < k; ++i)
    {
      out.R.at(i, k) = W.at(i, k);
    }
    out.R.at(k, k) = diag[static_cast<std::size_t>(k)];
  }

  // Q = H_0 ... H_{n-1} E_n, applied column by column.
  out.Q = DenseMatrix(m, n);
  for (std::int64_t j = 0; j < n; ++j)
  {
    if (diag[static_cast<std::size_t>(j)] == 0.0)
    {
      continue; // rank-deficient direction: leave the column zero
    }
    double *q = out.Q.col(j);
    q[j] = 1.0;
    for (std::int64_t k = std::min(j, n - 1); k >= 0; --k)
    {
      if (tau[static_cast<std::size_t>(k)] == 0.0)
      {
        continue;
      }
      const double *v = W.col(k) + k;
      const std::size_t len = static_cast<std::size_t>(m - k);
      const double s = tau[static_cast<std::size_t>(k)] * ops.dot(v, q + k, len);
      ops.axpy(len, -s, v, q + k);
    }
  }

  // Fix signs so the diagonal of R is nonnegative.
  for (std::int64_t k = 0; k < n; ++k)
  {
    if (out.R.at(k, k) < 0.0)
    {
      for (std::int64_t j = k; j < n; ++j)
      {
        out.R.at(k, j) = -out.R.at(k, j);
      }
      ops.scal(static_cast<std::size_t>(m), -1.0, out.Q.col(k));
    }
    if (out.R.at(k, k) > 0.0)
    {
      ++out.rank;
    }
  }
  return out;
}

DenseLu DenseLu::factor(const DenseMatrix &A)
{
  if (A.nrows != A.ncols)
  {
    throw ArgumentError("DenseLu: matrix must be square");
  }
  const std::int64_t n = A.nrows;
  const double pivot_tol = 1e-14 * std::max(frob_norm(A), 1e-300);

  DenseLu f;
  f.lu_ = A;
  f.perm_.resize(static_cast<std::size_t>(n));
  DenseMatrix &LU = f.lu_;
  for (std::int64_t i = 0; i < n; ++i)
  {
    f.perm_[static_cast<std::size_t>(i)] = i;
  }

  const auto &ops = kernels::active();
  for (std::int64_t k = 0; k < n; ++k)
  {
    std::int64_t p = k;
    double best = std::abs(LU.at(k, k));
    for (std::int64_t i = k + 1; i < n; ++i)
    {
      const double v = std::abs(LU.at(i, k));
      if (v > best)
      {
        best = v;
        p = i;
      }
    }
    if (best <= pivot_tol)
    {
      throw SingularMatrixError("dense_solve: singular matrix (pivot " + std::to_string(k) + ")", k);
    }
    if (p != k)
    {
      for (std::int64_t j = 0; j < n; ++j)
      {
        std::swap(LU.at(k, j), LU.at(p, j));
      }
      std::swap(f.perm_[static_cast<std::size_t>(k)], f.perm_[static_cast<std::size_t>(p)]);
    }
    const double inv = 1.0 / LU.at(k, k);
    for (std::int64_t i = k + 1; i < n; ++i)
    {
      LU.at(i, k) *= inv;
    }
    for (std::int64_t j = k + 1; j < n; ++j)
    {
      const double mkj = LU.at(k, j);
      if (mkj != 0.0)
      {
        ops.axpy(static_cast<std::size_t>(n - k - 1), -mkj, LU.col(k) + k + 1, LU.col(j) + k + 1);
      }
    }
  }
  return f;
}

DenseMatrix DenseLu::solve(const DenseMatrix &B) const
{
  const std::int64_t n = lu_.nrows;
  if (B.nrows != n)
  {
    throw ArgumentError("DenseLu::solve: right-hand-side row count mismatch");
  }
  const auto &ops = kernels::active();
  DenseMatrix X(n, B.ncols);
  for (std::int64_t j = 0; j < B.ncols; ++j)
  {
    for (std::int64_t i = 0; i < n; ++i)
    {
      X.at(i, j) = B.at(perm_[static_cast<std::size_t>(i)], j);
    }
    for (std::int64_t k = 0; k < n; ++k)
    {
      const double xk = X.at(k, j);
      if (xk != 0.0)
      {
        ops.axpy(static_cast<std::size_t>(n - k - 1), -xk, lu_.col(k) + k + 1, X.col(j) + k + 1);
      }
    }
    for (std::int64_t k = n - 1; k >= 0; --k)
    {
      X.at(k, j) /= lu_.at(k, k);
      const double xk = X.at(k, j);
      if (xk != 0.0 && k > 0)
      {
        ops.axpy(static_cast<std::size_t>(k), -xk, lu_.col(k), X.col(j));
      }
    }
  }
  return X;
}

std::vector<double> DenseLu::solve_vector(std::span<const double> b) const
{
  DenseMatrix B(static_cast<std::int64_t>(b.size()), 1);
  std::copy(b.begin(), b.end(), B.values.begin());
  const DenseMatrix X = solve(B);
  return X.values;
}

DenseMatrix dense_solve(const DenseMatrix &A, const DenseMatrix &B)
{
  return DenseLu::factor(A).solve(B);
}

SparseMatrix dense_to_sparse(const DenseMatrix &A)
{
  std::vector<SparseMatrix::Triplet> t;
  for (std::int64_t j = 0; j < A.ncols; ++j)
  {
    for (std::int64_t i = 0; i < A.nrows; ++i)
    {
      if (A.at(i, j) != 0.0)
      {
        t.push_back({i, j, A.at(i, j)});
      }
    }
  }
  return SparseMatrix::from_triplets(A.nrows, A.ncols, std::move(t));
}

DenseMatrix sparse_to_dense(const SparseMatrix &A)
{
  DenseMatrix D(A.nrows, A.ncols);
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    for (std::int64_t k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      D.at(i, A.col_idx[static_cast<std::size_t>(k)]) = A.values[static_cast<std::size_t>(k)];
    }
  }
  return D;
}

} // namespace mor
