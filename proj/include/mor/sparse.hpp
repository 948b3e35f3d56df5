// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mor
{

/// Compressed sparse row matrix. Invariants after construction:
///   - row_ptr nondecreasing, row_ptr[0] == 0, row_ptr[nrows] == nnz
///   - column indices strictly increasing within each row, all < ncols
///   - no stored entries whose value is exactly zero
struct SparseMatrix
{
  std::int64_t nrows = 0;
  std::int64_t ncols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }

  struct Triplet
  {
    std::int64_t row;
    std::int64_t col;
    double value;
  };

  /// Builds CSR from an arbitrary-order triplet list; duplicate positions are
  /// summed, exact zeros are dropped.
  static SparseMatrix from_triplets(std::int64_t nrows, std::int64_t ncols, std::vector<Triplet> triplets);

  static SparseMatrix identity(std::int64_t n);
  static SparseMatrix diagonal(std::span<const double> d);

  /// Value at (i, j); zero when the position is not stored. Binary search per
  /// call, meant for tests and small matrices.
  double at(std::int64_t i, std::int64_t j) const;

  /// Throws ArgumentError when a CSR invariant is violated.
  void check_invariants() const;
};

/// y = A x with per-row in-order accumulation.
std::vector<double> spmv(const SparseMatrix &A, std::span<const double> x);
void spmv_into(const SparseMatrix &A, std::span<const double> x, std::span<double> y);

/// a*A + b*B over the union sparsity pattern; entries that cancel exactly are
/// dropped.
SparseMatrix sp_add_scaled(const SparseMatrix &A, const SparseMatrix &B, double a, double b);

SparseMatrix transpose(const SparseMatrix &A);

/// sum of diagonal entries
double trace(const SparseMatrix &A);

/// trace(A^T B) = sum_{ij} A_ij B_ij over the intersecting pattern, accumulated
/// row-major; trace_inner(A, B) and trace_inner(B, A) run the identical
/// summation order.
double trace_inner(const SparseMatrix &A, const SparseMatrix &B);

/// sqrt(trace_inner(A, A)) -- shares the summation path with trace_inner so
/// frob_norm(A)^2 == trace_inner(A, A) holds exactly.
double frob_norm(const SparseMatrix &A);

} // namespace mor
