// SPDX-License-Identifier: Apache-2.0

#include "mor/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mor/errors.hpp"
#include "mor/kernels.hpp"

namespace mor
{

SparseMatrix SparseMatrix::from_triplets(std::int64_t nrows, std::int64_t ncols, std::vector<Triplet> triplets)
{
  if (nrows < 0 || ncols < 0)
  {
    throw ArgumentError("from_triplets: negative dimension");
  }
  for (const auto &t : triplets)
  {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
    {
      throw ArgumentError("from_triplets: entry index out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix A;
  A.nrows = nrows;
  A.ncols = ncols;
  A.row_ptr.assign(static_cast<std::size_t>(nrows) + 1, 0);
  A.col_idx.reserve(triplets.size());
  A.values.reserve(triplets.size());

  std::size_t k = 0;
  for (std::int64_t i = 0; i < nrows; ++i)
  {
    while (k < triplets.size() && triplets[k].row == i)
    {
      const std::int64_t col = triplets[k].col;
      double v = 0.0;
      while (k < triplets.size() && triplets[k].row == i && triplets[k].col == col)
      {
        v += triplets[k].value;
        ++k;
      }
      if (v != 0.0)
      {
        A.col_idx.push_back(static_cast<std::int32_t>(col));
        A.values.push_back(v);
      }
    }
    A.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(A.values.size());
  }
  return A;
}

SparseMatrix SparseMatrix::identity(std::int64_t n)
{
  SparseMatrix A;
  A.nrows = n;
  A.ncols = n;
  A.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  A.col_idx.resize(static_cast<std::size_t>(n));
  A.values.assign(static_cast<std::size_t>(n), 1.0);
  for (std::int64_t i = 0; i <= n; ++i)
  {
    A.row_ptr[static_cast<std::size_t>(i)] = i;
  }
  for (std::int64_t i = 0; i < n; ++i)
  {
    A.col_idx[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
  }
  return A;
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d)
{
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), d[i]});
  }
  return from_triplets(static_cast<std::int64_t>(d.size()), static_cast<std::int64_t>(d.size()), std::move(t));
}

double SparseMatrix::at(std::int64_t i, std::int64_t j) const
{
  if (i < 0 || i >= nrows || j < 0 || j >= ncols)
  {
    throw ArgumentError("SparseMatrix::at: index out of range");
  }
  const auto b = col_idx.begin() + row_ptr[static_cast<std::size_t>(i)];
  const auto e = col_idx.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
  if (it != e && *it == static_cast<std::int32_t>(j))
  {
    return values[static_cast<std::size_t>(it - col_idx.begin())];
  }
  return 0.0;
}

void SparseMatrix::check_invariants() const
{
  if (row_ptr.size() != static_cast<std::size_t>(nrows) + 1 || row_ptr.front() != 0 ||
      row_ptr.back() != nnz() || col_idx.size() != values.size())
  {
    throw ArgumentError("SparseMatrix: inconsistent CSR arrays");
  }
  for (std::int64_t i = 0; i < nrows; ++i)
  {
    if (row_ptr[static_cast<std::size_t>(i)] > row_ptr[static_cast<std::size_t>(i) + 1])
    {
      throw ArgumentError("SparseMatrix: row_ptr not nondecreasing");
    }
    for (std::int64_t k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      const auto uk = static_cast<std::size_t>(k);
      if (col_idx[uk] < 0 || col_idx[uk] >= ncols)
      {
        throw ArgumentError("SparseMatrix: column index out of range");
      }
      if (k > row_ptr[static_cast<std::size_t>(i)] && col_idx[uk - 1] >= col_idx[uk])
      {
        throw ArgumentError("SparseMatrix: columns not strictly increasing within a row");
      }
      if (values[uk] == 0.0)
      {
        throw ArgumentError("SparseMatrix: stored exact zero");
      }
    }
  }
}

void spmv_into(const SparseMatrix &A, std::span<const double> x, std::span<double> y)
{
  if (static_cast<std::int64_t>(x.size()) != A.ncols)
  {
    throw ArgumentError("spmv: x length does not match ncols");
  }
  if (static_cast<std::int64_t>(y.size()) != A.nrows)
  {
    throw ArgumentError("spmv: y length does not match nrows");
  }
  const auto &ops = kernels::active();
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    const std::int64_t b = A.row_ptr[static_cast<std::size_t>(i)];
    const std::int64_t e = A.row_ptr[static_cast<std::size_t>(i) + 1];
    y[static_cast<std::size_t>(i)] =
        ops.gather_dot(A.values.data() + b, A.col_idx.data() + b, x.data(), static_cast<std::size_t>(e - b));
  }
}

std::vector<double> spmv(const SparseMatrix &A, std::span<const double> x)
{
  std::vector<double> y(static_cast<std::size_t>(A.nrows));
  spmv_into(A, x, y);
  return y;
}

SparseMatrix sp_add_scaled(const SparseMatrix &A, const SparseMatrix &B, double a, double b)
{
  if (A.nrows != B.nrows || A.ncols != B.ncols)
  {
    throw ArgumentError("sp_add_scaled: shape mismatch");
  }
  SparseMatrix C;
  C.nrows = A.nrows;
  C.ncols = A.ncols;
  C.row_ptr.assign(static_cast<std::size_t>(A.nrows) + 1, 0);
  C.col_idx.reserve(A.col_idx.size() + B.col_idx.size());
  C.values.reserve(A.values.size() + B.values.size());

  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    std::int64_t ka = A.row_ptr[static_cast<std::size_t>(i)];
    const std::int64_t ea = A.row_ptr[static_cast<std::size_t>(i) + 1];
    std::int64_t kb = B.row_ptr[static_cast<std::size_t>(i)];
    const std::int64_t eb = B.row_ptr[static_cast<std::size_t>(i) + 1];
    while (ka < ea || kb < eb)
    {
      std::int32_t col;
      double v;
      if (kb >= eb || (ka < ea && A.col_idx[static_cast<std::size_t>(ka)] < B.col_idx[static_cast<std::size_t>(kb)]))
      {
        col = A.col_idx[static_cast<std::size_t>(ka)];
        v = a * A.values[static_cast<std::size_t>(ka)];
        ++ka;
      }
      else if (ka >= ea || B.col_idx[static_cast<std::size_t>(kb)] < A.col_idx[static_cast<std::size_t>(ka)])
      {
        col = B.col_idx[static_cast<std::size_t>(kb)];
        v = b * B.values[static_cast<std::size_t>(kb)];
        ++kb;
      }
      else
      {
        col = A.col_idx[static_cast<std::size_t>(ka)];
        v = a * A.values[static_cast<std::size_t>(ka)] + b * B.values[static_cast<std::size_t>(kb)];
        ++ka;
        ++kb;
      }
      if (v != 0.0)
      {
        C.col_idx.push_back(col);
        C.values.push_back(v);
      }
    }
    C.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(C.values.size());
  }
  return C;
}

SparseMatrix transpose(const SparseMatrix &A)
{
  SparseMatrix T;
  T.nrows = A.ncols;
  T.ncols = A.nrows;
  T.row_ptr.assign(static_cast<std::size_t>(A.ncols) + 1, 0);
  T.col_idx.resize(A.col_idx.size());
  T.values.resize(A.values.size());

  for (const std::int32_t c : A.col_idx)
  {
    ++T.row_ptr[static_cast<std::size_t>(c) + 1];
  }
  for (std::size_t i = 1; i < T.row_ptr.size(); ++i)
  {
    T.row_ptr[i] += T.row_ptr[i - 1];
  }
  std::vector<std::int64_t> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    for (std::int64_t k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      const auto c = static_cast<std::size_t>(A.col_idx[static_cast<std::size_t>(k)]);
      const auto slot = static_cast<std::size_t>(next[c]++);
      T.col_idx[slot] = static_cast<std::int32_t>(i);
      T.values[slot] = A.values[static_cast<std::size_t>(k)];
    }
  }
  return T;
}

double trace(const SparseMatrix &A)
{
  double t = 0.0;
  const std::int64_t n = std::min(A.nrows, A.ncols);
  for (std::int64_t i = 0; i < n; ++i)
  {
    t += A.at(i, i);
  }
  return t;
}

double trace_inner(const SparseMatrix &A, const SparseMatrix &B)
{
  if (A.nrows != B.nrows || A.ncols != B.ncols)
  {
    throw ArgumentError("trace_inner: shape mismatch");
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    std::int64_t ka = A.row_ptr[static_cast<std::size_t>(i)];
    const std::int64_t ea = A.row_ptr[static_cast<std::size_t>(i) + 1];
    std::int64_t kb = B.row_ptr[static_cast<std::size_t>(i)];
    const std::int64_t eb = B.row_ptr[static_cast<std::size_t>(i) + 1];
    while (ka < ea && kb < eb)
    {
      const std::int32_t ca = A.col_idx[static_cast<std::size_t>(ka)];
      const std::int32_t cb = B.col_idx[static_cast<std::size_t>(kb)];
      if (ca < cb)
      {
        ++ka;
      }
      else if (cb < ca)
      {
        ++kb;
      }
      else
      {
        acc += A.values[static_cast<std::size_t>(ka)] * B.values[static_cast<std::size_t>(kb)];
        ++ka;
        ++kb;
      }
    }
  }
  return acc;
}

double frob_norm(const SparseMatrix &A)
{
  return std::sqrt(trace_inner(A, A));
}

} // namespace mor
