// SPDX-License-Identifier: Apache-2.0

#include "mor/cplx.hpp"

#include <algorithm>
#include <cmath>

#include "mor/dense.hpp"
#include "mor/errors.hpp"
#include "mor/sparse.hpp"

namespace mor
{

ZDenseLu ZDenseLu::factor(std::vector<cxd> a, std::int64_t n, bool singular_ok)
{
  if (static_cast<std::int64_t>(a.size()) != n * n)
  {
    throw ArgumentError("ZDenseLu: bad buffer size");
  }
  ZDenseLu f;
  f.n_ = n;
  f.lu_ = std::move(a);
  f.piv_.resize(static_cast<std::size_t>(n));

  double scale = 0.0;
  for (const cxd &v : f.lu_)
  {
    scale = std::max(scale, std::abs(v));
  }
  const double tiny = 1e-300 + 1e-30 * scale;

  auto at = [&](std::int64_t i, std::int64_t j) -> cxd & { return f.lu_[static_cast<std::size_t>(j * n + i)]; };

  for (std::int64_t k = 0; k < n; ++k)
  {
    std::int64_t p = k;
    double best = std::abs(at(k, k));
    for (std::int64_t i = k + 1; i < n; ++i)
    {
      const double v = std::abs(at(i, k));
      if (v > best)
      {
        best = v;
        p = i;
      }
    }
    if (best == 0.0 || (!singular_ok && best <= 1e-16 * scale))
    {
      if (!singular_ok)
      {
        throw SingularMatrixError("ZDenseLu: singular matrix (pivot " + std::to_string(k) + ")", k);
      }
      at(p, k) = cxd(tiny, 0.0);
    }
    f.piv_[static_cast<std::size_t>(k)] = p;
    if (p != k)
    {
      for (std::int64_t j = 0; j < n; ++j)
      {
        std::swap(at(k, j), at(p, j));
      }
    }
    const cxd inv = 1.0 / at(k, k);
    for (std::int64_t i = k + 1; i < n; ++i)
    {
      at(i, k) *= inv;
    }
    for (std::int64_t j = k + 1; j < n; ++j)
    {
      const cxd mkj = at(k, j);
      if (mkj != 0.0)
      {
        for (std::int64_t i = k + 1; i < n; ++i)
        {
          at(i, j) -= mkj * at(i, k);
        }
      }
    }
  }
  return f;
}

void ZDenseLu::solve_in_place(cxd *b) const
{
  const std::int64_t n = n_;
  auto at = [&](std::int64_t i, std::int64_t j) -> const cxd & { return lu_[static_cast<std::size_t>(j * n + i)]; };
  for (std::int64_t k = 0; k < n; ++k)
  {
    const std::int64_t p = piv_[static_cast<std::size_t>(k)];
    if (p != k)
    {
      std::swap(b[k], b[p]);
    }
    const cxd bk = b[k];
    if (bk != 0.0)
    {
      for (std::int64_t i = k + 1; i < n; ++i)
      {
        b[i] -= at(i, k) * bk;
      }
    }
  }
  for (std::int64_t k = n - 1; k >= 0; --k)
  {
    b[k] /= at(k, k);
    const cxd bk = b[k];
    if (bk != 0.0)
    {
      for (std::int64_t i = 0; i < k; ++i)
      {
        b[i] -= at(i, k) * bk;
      }
    }
  }
}

std::vector<cxd> ZDenseLu::solve(std::vector<cxd> b) const
{
  if (static_cast<std::int64_t>(b.size()) != n_)
  {
    throw ArgumentError("ZDenseLu::solve: dimension mismatch");
  }
  solve_in_place(b.data());
  return b;
}

std::int64_t bandwidth_of(const SparseMatrix &A)
{
  std::int64_t bw = 0;
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    for (std::int64_t k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      bw = std::max<std::int64_t>(bw, std::llabs(i - A.col_idx[static_cast<std::size_t>(k)]));
    }
  }
  return bw;
}

ZBandedLu ZBandedLu::factor_quadratic(const SparseMatrix &M, const SparseMatrix &D, const SparseMatrix &K, cxd s)
{
  const std::int64_t n = K.nrows;
  if (M.nrows != n || D.nrows != n || M.ncols != n || D.ncols != n || K.ncols != n)
  {
    throw ArgumentError("ZBandedLu: operands must be square with equal dimension");
  }
  const std::int64_t b = std::max({bandwidth_of(M), bandwidth_of(D), bandwidth_of(K)});

  ZBandedLu f;
  f.n_ = n;
  f.kl_ = b;
  f.ldab_ = 3 * b + 1; // kl fill rows + kl + ku + 1
  f.ab_.assign(static_cast<std::size_t>(f.ldab_ * n), cxd(0.0, 0.0));
  f.piv_.resize(static_cast<std::size_t>(n));

  const cxd s2 = s * s;
  // ab(kl + ku + i - j, j) holds entry (i, j); ku = kl = b, fill above.
  auto ab = [&](std::int64_t i, std::int64_t j) -> cxd & {
    return f.ab_[static_cast<std::size_t>(j * f.ldab_ + (2 * b + i - j))];
  };
  auto scatter = [&](const SparseMatrix &A, cxd w) {
    if (w == 0.0)
    {
      return;
    }
    for (std::int64_t i = 0; i < n; ++i)
    {
      for (std::int64_t k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1];
           ++k)
      {
        ab(i, A.col_idx[static_cast<std::size_t>(k)]) += w * A.values[static_cast<std::size_t>(k)];
      }
    }
  };
  scatter(M, s2);
  scatter(D, s);
  scatter(K, cxd(1.0, 0.0));

  const std::int64_t kl = b, ku = b;
  for (std::int64_t k = 0; k < n; ++k)
  {
    const std::int64_t imax = std::min(n - 1, k + kl);
    std::int64_t p = k;
    double best = std::abs(ab(k, k));
    for (std::int64_t i = k + 1; i <= imax; ++i)
    {
      const double v = std::abs(ab(i, k));
      if (v > best)
      {
        best = v;
        p = i;
      }
    }
    if (best == 0.0)
    {
      throw SingularMatrixError("ZBandedLu: singular matrix (pivot " + std::to_string(k) + ")", k);
    }
    f.piv_[static_cast<std::size_t>(k)] = p;
    const std::int64_t jmax = std::min(n - 1, k + kl + ku);
    if (p != k)
    {
      for (std::int64_t j = k; j <= jmax; ++j)
      {
        std::swap(ab(k, j), ab(p, j));
      }
    }
    const cxd inv = 1.0 / ab(k, k);
    for (std::int64_t i = k + 1; i <= imax; ++i)
    {
      ab(i, k) *= inv;
    }
    for (std::int64_t j = k + 1; j <= jmax; ++j)
    {
      const cxd mkj = ab(k, j);
      if (mkj != 0.0)
      {
        for (std::int64_t i = k + 1; i <= imax; ++i)
        {
          ab(i, j) -= mkj * ab(i, k);
        }
      }
    }
  }
  return f;
}

void ZBandedLu::solve_in_place(cxd *x) const
{
  const std::int64_t n = n_, kl = kl_, ku = kl_;
  auto ab = [&](std::int64_t i, std::int64_t j) -> const cxd & {
    return ab_[static_cast<std::size_t>(j * ldab_ + (kl + ku + i - j))];
  };
  for (std::int64_t k = 0; k < n; ++k)
  {
    const std::int64_t p = piv_[static_cast<std::size_t>(k)];
    if (p != k)
    {
      std::swap(x[k], x[p]);
    }
    const cxd xk = x[k];
    if (xk != 0.0)
    {
      const std::int64_t imax = std::min(n - 1, k + kl);
      for (std::int64_t i = k + 1; i <= imax; ++i)
      {
        x[i] -= ab(i, k) * xk;
      }
    }
  }
  for (std::int64_t k = n - 1; k >= 0; --k)
  {
    x[k] /= ab(k, k);
    const cxd xk = x[k];
    if (xk != 0.0)
    {
      const std::int64_t imin = std::max<std::int64_t>(0, k - kl - ku);
      for (std::int64_t i = imin; i < k; ++i)
      {
        x[i] -= ab(i, k) * xk;
      }
    }
  }
}

TransferFunction::TransferFunction(const SparseMatrix &M, const SparseMatrix &D, const SparseMatrix &K,
                                   const DenseMatrix &F, const DenseMatrix &Cp, const DenseMatrix &Cv)
  : M_(&M), D_(&D), K_(&K), F_(&F), Cp_(&Cp), Cv_(&Cv), n_(K.nrows), m_(F.ncols), q_(Cp.nrows)
{
  if (F.nrows != n_ || Cp.ncols != n_ || Cv.ncols != n_ || Cv.nrows != q_)
  {
    throw ArgumentError("TransferFunction: dimension mismatch");
  }
  const std::int64_t bw = std::max({bandwidth_of(M), bandwidth_of(D), bandwidth_of(K)});
  banded_ = bw <= 64;
  if (!banded_ && n_ > 1024)
  {
    throw ArgumentError("TransferFunction: operator too large for dense fallback and band too wide");
  }
}

std::vector<cxd> TransferFunction::eval(cxd s) const
{
  // X = (s^2 M + s D + K)^{-1} F, column by column.
  std::vector<cxd> X(static_cast<std::size_t>(n_ * m_));
  if (banded_)
  {
    const ZBandedLu lu = ZBandedLu::factor_quadratic(*M_, *D_, *K_, s);
    for (std::int64_t j = 0; j < m_; ++j)
    {
      cxd *xj = X.data() + j * n_;
      for (std::int64_t i = 0; i < n_; ++i)
      {
        xj[i] = cxd(F_->at(i, j), 0.0);
      }
      lu.solve_in_place(xj);
    }
  }
  else
  {
    std::vector<cxd> A(static_cast<std::size_t>(n_ * n_), cxd(0.0, 0.0));
    const cxd s2 = s * s;
    auto scatter = [&](const SparseMatrix &S, cxd w) {
      for (std::int64_t i = 0; i < n_; ++i)
      {
        for (std::int64_t k = S.row_ptr[static_cast<std::size_t>(i)]; k < S.row_ptr[static_cast<std::size_t>(i) + 1];
             ++k)
        {
          A[static_cast<std::size_t>(S.col_idx[static_cast<std::size_t>(k)] * n_ + i)] +=
              w * S.values[static_cast<std::size_t>(k)];
        }
      }
    };
    scatter(*M_, s2);
    scatter(*D_, s);
    scatter(*K_, cxd(1.0, 0.0));
    const ZDenseLu lu = ZDenseLu::factor(std::move(A), n_);
    for (std::int64_t j = 0; j < m_; ++j)
    {
      cxd *xj = X.data() + j * n_;
      for (std::int64_t i = 0; i < n_; ++i)
      {
        xj[i] = cxd(F_->at(i, j), 0.0);
      }
      lu.solve_in_place(xj);
    }
  }

  // H = (Cp + s Cv) X
  std::vector<cxd> H(static_cast<std::size_t>(q_ * m_), cxd(0.0, 0.0));
  for (std::int64_t j = 0; j < m_; ++j)
  {
    const cxd *xj = X.data() + j * n_;
    for (std::int64_t r = 0; r < q_; ++r)
    {
      cxd acc(0.0, 0.0);
      for (std::int64_t i = 0; i < n_; ++i)
      {
        acc += (cxd(Cp_->at(r, i), 0.0) + s * Cv_->at(r, i)) * xj[i];
      }
      H[static_cast<std::size_t>(j * q_ + r)] = acc;
    }
  }
  return H;
}

double TransferFunction::frob_sq(cxd s) const
{
  double acc = 0.0;
  for (const cxd &h : eval(s))
  {
    acc += std::norm(h);
  }
  return acc;
}

double h2_from_density(const std::function<double(double)> &g, double omega_hint, double rel_tol, double tail_rtol)
{
  // Adaptive trapezoid on [a, b] by interval bisection.
  const auto segment = [&](double a, double b) -> double {
    struct Iv
    {
      double a, b, fa, fb, coarse;
      int depth;
    };
    std::vector<Iv> stack;
    const double fa0 = g(a), fb0 = g(b);
    stack.push_back({a, b, fa0, fb0, 0.5 * (fa0 + fb0) * (b - a), 0});
    double total = 0.0;
    while (!stack.empty())
    {
      Iv iv = stack.back();
      stack.pop_back();
      const double mid = 0.5 * (iv.a + iv.b);
      const double fm = g(mid);
      const double left = 0.25 * (iv.fa + fm) * (iv.b - iv.a);
      const double right = 0.25 * (fm + iv.fb) * (iv.b - iv.a);
      const double fine = left + right;
      if (iv.depth >= 40 || std::abs(fine - iv.coarse) <= rel_tol * std::abs(fine) + 1e-300)
      {
        total += fine;
      }
      else
      {
        stack.push_back({iv.a, mid, iv.fa, fm, left, iv.depth + 1});
        stack.push_back({mid, iv.b, fm, iv.fb, right, iv.depth + 1});
      }
    }
    return total;
  };

  double omega_max = std::max(omega_hint, 1e-6);
  double total = segment(0.0, omega_max);
  for (int round = 0; round < 60; ++round)
  {
    const double tail = segment(omega_max, 2.0 * omega_max);
    total += tail;
    omega_max *= 2.0;
    if (tail <= tail_rtol * std::abs(total))
    {
      break;
    }
  }
  return std::sqrt(total / 3.14159265358979323846);
}

} // namespace mor
