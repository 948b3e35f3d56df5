// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mor
{

struct SparseMatrix;

/// Column-major dense matrix.
struct DenseMatrix
{
  std::int64_t nrows = 0;
  std::int64_t ncols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::int64_t r, std::int64_t c) : nrows(r), ncols(c), values(static_cast<std::size_t>(r * c), 0.0) {}

  static DenseMatrix identity(std::int64_t n);
  static DenseMatrix from_column(std::span<const double> v);

  double &at(std::int64_t i, std::int64_t j) { return values[static_cast<std::size_t>(j * nrows + i)]; }
  double at(std::int64_t i, std::int64_t j) const { return values[static_cast<std::size_t>(j * nrows + i)]; }

  double *col(std::int64_t j) { return values.data() + j * nrows; }
  const double *col(std::int64_t j) const { return values.data() + j * nrows; }

  std::span<const double> col_span(std::int64_t j) const
  {
    return {col(j), static_cast<std::size_t>(nrows)};
  }
};

double frob_norm(const DenseMatrix &A);

/// trace(A^T B) over all entries; shapes must agree.
double trace_inner(const DenseMatrix &A, const DenseMatrix &B);

DenseMatrix transpose(const DenseMatrix &A);

/// C = A B
DenseMatrix matmul(const DenseMatrix &A, const DenseMatrix &B);
/// C = A^T B
DenseMatrix matmul_tn(const DenseMatrix &A, const DenseMatrix &B);

/// y = A x
std::vector<double> matvec(const DenseMatrix &A, std::span<const double> x);

/// B = A S where S sparse (dense rows times sparse columns via transpose).
DenseMatrix dense_times_sparse(const DenseMatrix &A, const SparseMatrix &S);
/// B = S A, sparse times each dense column.
DenseMatrix sparse_times_dense(const SparseMatrix &S, const DenseMatrix &A);

struct QrResult
{
  DenseMatrix Q; // nrows x ncols, orthonormal columns (zero columns where rank deficient)
  DenseMatrix R; // ncols x ncols, upper triangular, nonnegative diagonal
  std::int64_t rank = 0;
};

/// Thin Householder QR of A (nrows >= ncols). Diagonal entries of R below
/// rank_tol * ||A||_F are flushed to exact zero and excluded from the rank;
/// the corresponding Q columns are zeroed rather than reported as an error.
QrResult thin_qr(const DenseMatrix &A, double rank_tol = 1e-12);

/// Reusable LU factorization with partial pivoting. Pivots below
/// 1e-14 * ||A||_F raise SingularMatrixError carrying the pivot index.
class DenseLu
{
public:
  static DenseLu factor(const DenseMatrix &A);
  DenseMatrix solve(const DenseMatrix &B) const;
  std::vector<double> solve_vector(std::span<const double> b) const;
  std::int64_t dim() const { return lu_.nrows; }

private:
  DenseMatrix lu_;
  std::vector<std::int64_t> perm_;
};

/// One-shot A X = B through DenseLu.
DenseMatrix dense_solve(const DenseMatrix &A, const DenseMatrix &B);

SparseMatrix dense_to_sparse(const DenseMatrix &A);
DenseMatrix sparse_to_dense(const SparseMatrix &A);

} // namespace mor
