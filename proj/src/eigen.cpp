// SPDX-License-Identifier: Apache-2.0

#include "mor/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mor/cplx.hpp"
#include "mor/errors.hpp"
#include "mor/kernels.hpp"

namespace mor
{

namespace
{

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Reduces A to upper Hessenberg in place, accumulating the similarity into Q.
void hessenberg(DenseMatrix &H, DenseMatrix &Q)
{
  const std::int64_t n = H.nrows;
  const auto &ops = kernels::active();
  std::vector<double> v(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k + 2 < n; ++k)
  {
    const std::int64_t len = n - k - 1;
    double sigma = 0.0;
    for (std::int64_t i = 0; i < len; ++i)
    {
      v[static_cast<std::size_t>(i)] = H.at(k + 1 + i, k);
      sigma += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    sigma = std::sqrt(sigma);
    if (sigma == 0.0)
    {
      continue;
    }
    const double alpha = v[0] >= 0.0 ? -sigma : sigma;
    v[0] -= alpha;
    const double vtv = ops.dot(v.data(), v.data(), static_cast<std::size_t>(len));
    if (vtv == 0.0)
    {
      continue;
    }
    const double tau = 2.0 / vtv;

    // H <- P H with P = I - tau v v^T acting on rows k+1..n-1
    for (std::int64_t j = k; j < n; ++j)
    {
      double s = 0.0;
      for (std::int64_t i = 0; i < len; ++i)
      {
        s += v[static_cast<std::size_t>(i)] * H.at(k + 1 + i, j);
      }
      s *= tau;
      for (std::int64_t i = 0; i < len; ++i)
      {
        H.at(k + 1 + i, j) -= s * v[static_cast<std::size_t>(i)];
      }
    }
    // H <- H P on columns k+1..n-1
    for (std::int64_t i = 0; i < n; ++i)
    {
      double s = 0.0;
      for (std::int64_t j = 0; j < len; ++j)
      {
        s += H.at(i, k + 1 + j) * v[static_cast<std::size_t>(j)];
      }
      s *= tau;
      for (std::int64_t j = 0; j < len; ++j)
      {
        H.at(i, k + 1 + j) -= s * v[static_cast<std::size_t>(j)];
      }
    }
    // Q <- Q P
    for (std::int64_t i = 0; i < n; ++i)
    {
      double s = 0.0;
      for (std::int64_t j = 0; j < len; ++j)
      {
        s += Q.at(i, k + 1 + j) * v[static_cast<std::size_t>(j)];
      }
      s *= tau;
      for (std::int64_t j = 0; j < len; ++j)
      {
        Q.at(i, k + 1 + j) -= s * v[static_cast<std::size_t>(j)];
      }
    }
    H.at(k + 1, k) = alpha;
    for (std::int64_t i = k + 2; i < n; ++i)
    {
      H.at(i, k) = 0.0;
    }
  }
}

// Householder reflector for a 3-vector (or 2-vector when x2 unused).
struct Reflector3
{
  double v0 = 0.0, v1 = 0.0, v2 = 0.0, tau = 0.0;
  int len = 0;
};

Reflector3 make_reflector(double x0, double x1, double x2, int len)
{
  Reflector3 r;
  r.len = len;
  double sigma = x0 * x0 + x1 * x1 + (len == 3 ? x2 * x2 : 0.0);
  sigma = std::sqrt(sigma);
  if (sigma == 0.0)
  {
    return r;
  }
  const double alpha = x0 >= 0.0 ? -sigma : sigma;
  r.v0 = x0 - alpha;
  r.v1 = x1;
  r.v2 = len == 3 ? x2 : 0.0;
  const double vtv = r.v0 * r.v0 + r.v1 * r.v1 + r.v2 * r.v2;
  r.tau = vtv > 0.0 ? 2.0 / vtv : 0.0;
  return r;
}

// Applies the implicit-QR bulge chase for the double shift on H[lo..hi],
// accumulating transforms into Q.
void francis_sweep(DenseMatrix &H, DenseMatrix &Q, std::int64_t lo, std::int64_t hi, double shift_sum,
                   double shift_prod)
{
  const std::int64_t n = H.nrows;
  // First column of (H - a)(H - b) e_1 restricted to the active block.
  const double h11 = H.at(lo, lo), h12 = H.at(lo, lo + 1);
  const double h21 = H.at(lo + 1, lo), h22 = H.at(lo + 1, lo + 1);
  const double h32 = H.at(lo + 2, lo + 1);
  double x = h11 * h11 + h12 * h21 - shift_sum * h11 + shift_prod;
  double y = h21 * (h11 + h22 - shift_sum);
  double z = h21 * h32;

  for (std::int64_t k = lo; k <= hi - 2; ++k)
  {
    const int len = (k < hi - 2) ? 3 : 3;
    Reflector3 r = make_reflector(x, y, z, len);
    if (r.tau != 0.0)
    {
      const std::int64_t jstart = std::max(lo, k - 1);
      // rows k..k+2
      for (std::int64_t j = jstart; j < n; ++j)
      {
        const double s = r.tau * (r.v0 * H.at(k, j) + r.v1 * H.at(k + 1, j) + r.v2 * H.at(k + 2, j));
        H.at(k, j) -= s * r.v0;
        H.at(k + 1, j) -= s * r.v1;
        H.at(k + 2, j) -= s * r.v2;
      }
      const std::int64_t iend = std::min(hi, k + 3);
      // cols k..k+2
      for (std::int64_t i = 0; i <= iend; ++i)
      {
        const double s = r.tau * (r.v0 * H.at(i, k) + r.v1 * H.at(i, k + 1) + r.v2 * H.at(i, k + 2));
        H.at(i, k) -= s * r.v0;
        H.at(i, k + 1) -= s * r.v1;
        H.at(i, k + 2) -= s * r.v2;
      }
      for (std::int64_t i = 0; i < n; ++i)
      {
        const double s = r.tau * (r.v0 * Q.at(i, k) + r.v1 * Q.at(i, k + 1) + r.v2 * Q.at(i, k + 2));
        Q.at(i, k) -= s * r.v0;
        Q.at(i, k + 1) -= s * r.v1;
        Q.at(i, k + 2) -= s * r.v2;
      }
    }
    x = H.at(k + 1, k);
    y = H.at(k + 2, k);
    z = (k + 3 <= hi) ? H.at(k + 3, k) : 0.0;
  }
  // Final 2-row reflector at hi-1.
  Reflector3 r = make_reflector(x, y, 0.0, 2);
  if (r.tau != 0.0)
  {
    const std::int64_t k = hi - 1;
    for (std::int64_t j = std::max(lo, k - 1); j < n; ++j)
    {
      const double s = r.tau * (r.v0 * H.at(k, j) + r.v1 * H.at(k + 1, j));
      H.at(k, j) -= s * r.v0;
      H.at(k + 1, j) -= s * r.v1;
    }
    for (std::int64_t i = 0; i <= hi; ++i)
    {
      const double s = r.tau * (r.v0 * H.at(i, k) + r.v1 * H.at(i, k + 1));
      H.at(i, k) -= s * r.v0;
      H.at(i, k + 1) -= s * r.v1;
    }
    for (std::int64_t i = 0; i < n; ++i)
    {
      const double s = r.tau * (r.v0 * Q.at(i, k) + r.v1 * Q.at(i, k + 1));
      Q.at(i, k) -= s * r.v0;
      Q.at(i, k + 1) -= s * r.v1;
    }
  }
  // Restore Hessenberg form below the first subdiagonal in the chased band.
  for (std::int64_t j = lo; j <= hi - 2; ++j)
  {
    for (std::int64_t i = j + 2; i <= std::min(hi, j + 3); ++i)
    {
      H.at(i, j) = 0.0;
    }
  }
}

// Applies a Givens rotation G = [[c, s], [-s, c]] as a similarity on rows and
// columns (p, p+1), accumulating into Q.
void apply_givens(DenseMatrix &T, DenseMatrix &Q, std::int64_t p, double c, double s)
{
  const std::int64_t n = T.nrows;
  for (std::int64_t j = 0; j < n; ++j)
  {
    const double a = T.at(p, j), b = T.at(p + 1, j);
    T.at(p, j) = c * a + s * b;
    T.at(p + 1, j) = -s * a + c * b;
  }
  for (std::int64_t i = 0; i < n; ++i)
  {
    const double a = T.at(i, p), b = T.at(i, p + 1);
    T.at(i, p) = c * a + s * b;
    T.at(i, p + 1) = -s * a + c * b;
  }
  for (std::int64_t i = 0; i < Q.nrows; ++i)
  {
    const double a = Q.at(i, p), b = Q.at(i, p + 1);
    Q.at(i, p) = c * a + s * b;
    Q.at(i, p + 1) = -s * a + c * b;
  }
}

// Rotates genuine 2x2 blocks with real eigenvalues into two 1x1 blocks, so
// the remaining 2x2 blocks carry complex pairs only.
void split_real_blocks(DenseMatrix &T, DenseMatrix &Q)
{
  const std::int64_t n = T.nrows;
  for (std::int64_t p = 0; p + 1 < n; ++p)
  {
    if (T.at(p + 1, p) == 0.0)
    {
      continue;
    }
    const double a = T.at(p, p), b = T.at(p, p + 1);
    const double c2 = T.at(p + 1, p), d = T.at(p + 1, p + 1);
    const double half = 0.5 * (a - d);
    const double disc = half * half + b * c2;
    if (disc < 0.0)
    {
      continue; // complex pair, keep the block
    }
    // Real eigenvalues: align (eigenvector of the larger |lambda|) with e_1.
    const double sq = std::sqrt(disc);
    const double mu = 0.5 * (a + d);
    const double l1 = (mu >= 0.0) ? mu + sq : mu - sq; // larger magnitude root
    // (A - l1 I) e = 0 with e = (b, l1 - a) or (l1 - d, c2)
    double ex = b, ey = l1 - a;
    if (std::abs(ex) + std::abs(ey) < std::abs(l1 - d) + std::abs(c2))
    {
      ex = l1 - d;
      ey = c2;
    }
    const double nrm = std::hypot(ex, ey);
    if (nrm == 0.0)
    {
      continue;
    }
    apply_givens(T, Q, p, ex / nrm, ey / nrm);
    T.at(p + 1, p) = 0.0;
  }
}

} // namespace

SchurResult real_schur(const DenseMatrix &A)
{
  if (A.nrows != A.ncols)
  {
    throw ArgumentError("real_schur: matrix must be square");
  }
  const std::int64_t n = A.nrows;
  SchurResult out;
  out.T = A;
  out.Q = DenseMatrix::identity(n);
  if (n <= 1)
  {
    return out;
  }
  DenseMatrix &H = out.T;
  DenseMatrix &Q = out.Q;
  hessenberg(H, Q);

  const double hnorm = std::max(frob_norm(H), 1e-300);
  auto negligible = [&](std::int64_t i) {
    const double s = std::abs(H.at(i - 1, i - 1)) + std::abs(H.at(i, i));
    return std::abs(H.at(i, i - 1)) <= kEps * (s > 0.0 ? s : hnorm);
  };

  std::int64_t hi = n - 1;
  std::int64_t sweeps = 0;
  std::int64_t since_deflation = 0;
  const std::int64_t max_sweeps = 30 * n;
  while (hi > 0)
  {
    if (++sweeps > max_sweeps)
    {
      throw ConvergenceError("real_schur: QR iteration exceeded " + std::to_string(max_sweeps) + " sweeps");
    }
    // Zero negligible subdiagonals, then find the active block [lo, hi].
    for (std::int64_t i = 1; i <= hi; ++i)
    {
      if (H.at(i, i - 1) != 0.0 && negligible(i))
      {
        H.at(i, i - 1) = 0.0;
      }
    }
    if (H.at(hi, hi - 1) == 0.0)
    {
      --hi;
      since_deflation = 0;
      continue;
    }
    if (hi >= 1 && (hi - 1 == 0 || H.at(hi - 1, hi - 2) == 0.0))
    {
      // 2x2 block at the bottom: deflate it as converged.
      hi -= 2;
      since_deflation = 0;
      if (hi < 0)
      {
        break;
      }
      continue;
    }
    std::int64_t lo = hi;
    while (lo > 0 && H.at(lo, lo - 1) != 0.0)
    {
      --lo;
    }

    double shift_sum, shift_prod;
    ++since_deflation;
    if (since_deflation % 20 == 0)
    {
      // Exceptional shift (ad hoc, in the LAPACK style).
      const double s1 = std::abs(H.at(hi, hi - 1)) + (hi >= 2 ? std::abs(H.at(hi - 1, hi - 2)) : 0.0);
      shift_sum = 1.5 * s1;
      shift_prod = s1 * s1 * 0.5625;
    }
    else
    {
      const double t11 = H.at(hi - 1, hi - 1), t12 = H.at(hi - 1, hi);
      const double t21 = H.at(hi, hi - 1), t22 = H.at(hi, hi);
      shift_sum = t11 + t22;
      shift_prod = t11 * t22 - t12 * t21;
    }
    francis_sweep(H, Q, lo, hi, shift_sum, shift_prod);
  }

  // Clean the strictly lower part outside the retained 2x2 blocks.
  for (std::int64_t j = 0; j < n; ++j)
  {
    for (std::int64_t i = j + 2; i < n; ++i)
    {
      H.at(i, j) = 0.0;
    }
  }
  split_real_blocks(H, Q);
  return out;
}

std::vector<std::complex<double>> quasi_triangular_eigenvalues(const DenseMatrix &T)
{
  std::vector<std::complex<double>> eigs;
  const std::int64_t n = T.nrows;
  std::int64_t i = 0;
  while (i < n)
  {
    if (i + 1 < n && T.at(i + 1, i) != 0.0)
    {
      const double a = T.at(i, i), b = T.at(i, i + 1);
      const double c = T.at(i + 1, i), d = T.at(i + 1, i + 1);
      const double re = 0.5 * (a + d);
      const double disc = 0.25 * (a - d) * (a - d) + b * c;
      const double im = std::sqrt(std::max(0.0, -disc));
      eigs.emplace_back(re, im);
      eigs.emplace_back(re, -im);
      i += 2;
    }
    else
    {
      eigs.emplace_back(T.at(i, i), 0.0);
      ++i;
    }
  }
  return eigs;
}

Spectrum quad_eig(const DenseMatrix &Mh, const DenseMatrix &Dh, const DenseMatrix &Kh, bool with_residuals)
{
  const std::int64_t r = Mh.nrows;
  if (Mh.ncols != r || Dh.nrows != r || Dh.ncols != r || Kh.nrows != r || Kh.ncols != r)
  {
    throw ArgumentError("quad_eig: operands must be square with equal dimension");
  }
  // Companion linearization [[0, I], [-Mh^{-1} Kh, -Mh^{-1} Dh]].
  DenseMatrix rhs(r, 2 * r);
  for (std::int64_t j = 0; j < r; ++j)
  {
    for (std::int64_t i = 0; i < r; ++i)
    {
      rhs.at(i, j) = Kh.at(i, j);
      rhs.at(i, r + j) = Dh.at(i, j);
    }
  }
  const DenseMatrix sol = dense_solve(Mh, rhs); // throws SingularMatrixError for singular Mh
  DenseMatrix C(2 * r, 2 * r);
  for (std::int64_t j = 0; j < r; ++j)
  {
    C.at(j, r + j) = 1.0;
    for (std::int64_t i = 0; i < r; ++i)
    {
      C.at(r + i, j) = -sol.at(i, j);
      C.at(r + i, r + j) = -sol.at(i, r + j);
    }
  }
  const SchurResult schur = real_schur(C);
  auto eigs = quasi_triangular_eigenvalues(schur.T);
  std::sort(eigs.begin(), eigs.end(), [](const std::complex<double> &a, const std::complex<double> &b) {
    if (a.real() != b.real())
    {
      return a.real() < b.real();
    }
    return a.imag() < b.imag();
  });

  Spectrum sp;
  sp.eigenvalues.reserve(eigs.size());
  for (const auto &l : eigs)
  {
    sp.eigenvalues.emplace_back(l.real(), l.imag());
  }

  if (with_residuals)
  {
    const double nm = frob_norm(Mh), nd = frob_norm(Dh), nk = frob_norm(Kh);
    const std::int64_t n2 = 2 * r;
    std::vector<cxd> base(static_cast<std::size_t>(n2 * n2));
    for (std::int64_t j = 0; j < n2; ++j)
    {
      for (std::int64_t i = 0; i < n2; ++i)
      {
        base[static_cast<std::size_t>(j * n2 + i)] = cxd(C.at(i, j), 0.0);
      }
    }
    sp.residual_norms.resize(eigs.size(), 0.0);
    for (std::size_t e = 0; e < eigs.size(); ++e)
    {
      const cxd lambda(eigs[e].real(), eigs[e].imag());
      std::vector<cxd> shifted = base;
      for (std::int64_t i = 0; i < n2; ++i)
      {
        shifted[static_cast<std::size_t>(i * n2 + i)] -= lambda;
      }
      const ZDenseLu lu = ZDenseLu::factor(std::move(shifted), n2, /*singular_ok=*/true);
      // Two rounds of inverse iteration from a deterministic start.
      std::vector<cxd> v(static_cast<std::size_t>(n2));
      for (std::int64_t i = 0; i < n2; ++i)
      {
        v[static_cast<std::size_t>(i)] = cxd(1.0 + 0.37 * static_cast<double>(i % 7), 0.21 * static_cast<double>(i % 5));
      }
      for (int round = 0; round < 2; ++round)
      {
        lu.solve_in_place(v.data());
        double nrm = 0.0;
        for (const cxd &x : v)
        {
          nrm += std::norm(x);
        }
        nrm = std::sqrt(nrm);
        if (nrm == 0.0)
        {
          break;
        }
        for (cxd &x : v)
        {
          x /= nrm;
        }
      }
      // Quadratic eigenvector = leading r components of the companion vector.
      std::vector<cxd> x(v.begin(), v.begin() + r);
      double xn = 0.0;
      for (const cxd &xi : x)
      {
        xn += std::norm(xi);
      }
      xn = std::sqrt(xn);
      if (xn == 0.0)
      {
        sp.residual_norms[e] = std::numeric_limits<double>::infinity();
        continue;
      }
      for (cxd &xi : x)
      {
        xi /= xn;
      }
      std::vector<cxd> res(static_cast<std::size_t>(r), cxd(0.0, 0.0));
      const cxd l2 = lambda * lambda;
      for (std::int64_t col = 0; col < r; ++col)
      {
        const cxd xc = x[static_cast<std::size_t>(col)];
        if (xc == 0.0)
        {
          continue;
        }
        for (std::int64_t i = 0; i < r; ++i)
        {
          res[static_cast<std::size_t>(i)] +=
              (l2 * Mh.at(i, col) + lambda * Dh.at(i, col) + Kh.at(i, col)) * xc;
        }
      }
      double rn = 0.0;
      for (const cxd &ri : res)
      {
        rn += std::norm(ri);
      }
      const double scale = std::norm(lambda) * nm + std::abs(lambda) * nd + nk;
      sp.residual_norms[e] = std::sqrt(rn) / (scale > 0.0 ? scale : 1.0);
    }
  }
  return sp;
}

DenseMatrix lyap_solve(const DenseMatrix &A, const DenseMatrix &W)
{
  const std::int64_t n = A.nrows;
  if (A.ncols != n || W.nrows != n || W.ncols != n)
  {
    throw ArgumentError("lyap_solve: dimension mismatch");
  }
  const SchurResult schur = real_schur(A);
  const DenseMatrix &T = schur.T;
  const DenseMatrix &Q = schur.Q;

  // Hurwitz validation from the Schur diagonal.
  {
    const auto eigs = quasi_triangular_eigenvalues(T);
    std::vector<std::pair<double, double>> bad;
    for (const auto &l : eigs)
    {
      if (l.real() >= 0.0)
      {
        bad.emplace_back(l.real(), l.imag());
      }
    }
    if (!bad.empty())
    {
      throw StabilityError("lyap_solve: matrix is not Hurwitz (" + std::to_string(bad.size()) +
                               " eigenvalue(s) with nonnegative real part)",
                           std::move(bad));
    }
  }

  // T Y + Y T^T = -Q^T W Q
  DenseMatrix Ct = matmul_tn(Q, matmul(W, Q));
  for (double &v : Ct.values)
  {
    v = -v;
  }

  // Diagonal block partition of T.
  std::vector<std::int64_t> starts;
  std::vector<std::int64_t> sizes;
  for (std::int64_t i = 0; i < n;)
  {
    starts.push_back(i);
    if (i + 1 < n && T.at(i + 1, i) != 0.0)
    {
      sizes.push_back(2);
      i += 2;
    }
    else
    {
      sizes.push_back(1);
      ++i;
    }
  }
  const std::int64_t nb = static_cast<std::int64_t>(starts.size());

  DenseMatrix Y(n, n);
  for (std::int64_t jb = nb - 1; jb >= 0; --jb)
  {
    const std::int64_t j0 = starts[static_cast<std::size_t>(jb)];
    const std::int64_t js = sizes[static_cast<std::size_t>(jb)];
    // rhs_j = Ct(:, j-block) - sum_{k > jb} Y(:, k-block) * T(j-block, k-block)^T
    DenseMatrix Rj(n, js);
    for (std::int64_t c = 0; c < js; ++c)
    {
      for (std::int64_t i = 0; i < n; ++i)
      {
        Rj.at(i, c) = Ct.at(i, j0 + c);
      }
    }
    for (std::int64_t kb = jb + 1; kb < nb; ++kb)
    {
      const std::int64_t k0 = starts[static_cast<std::size_t>(kb)];
      const std::int64_t ks = sizes[static_cast<std::size_t>(kb)];
      for (std::int64_t c = 0; c < js; ++c)
      {
        for (std::int64_t kc = 0; kc < ks; ++kc)
        {
          const double t = T.at(j0 + c, k0 + kc);
          if (t != 0.0)
          {
            for (std::int64_t i = 0; i < n; ++i)
            {
              Rj.at(i, c) -= Y.at(i, k0 + kc) * t;
            }
          }
        }
      }
    }
    // Row blocks bottom-up: T_ii Y_ij + Y_ij T_jj^T = Rj_i - sum_{k>i} T_ik Y_kj
    for (std::int64_t ib = nb - 1; ib >= 0; --ib)
    {
      const std::int64_t i0 = starts[static_cast<std::size_t>(ib)];
      const std::int64_t is = sizes[static_cast<std::size_t>(ib)];
      DenseMatrix rhs(is, js);
      for (std::int64_t rr = 0; rr < is; ++rr)
      {
        for (std::int64_t c = 0; c < js; ++c)
        {
          rhs.at(rr, c) = Rj.at(i0 + rr, c);
        }
      }
      for (std::int64_t kb = ib + 1; kb < nb; ++kb)
      {
        const std::int64_t k0 = starts[static_cast<std::size_t>(kb)];
        const std::int64_t ks = sizes[static_cast<std::size_t>(kb)];
        for (std::int64_t rr = 0; rr < is; ++rr)
        {
          for (std::int64_t kc = 0; kc < ks; ++kc)
          {
            const double t = T.at(i0 + rr, k0 + kc);
            if (t != 0.0)
            {
              for (std::int64_t c = 0; c < js; ++c)
              {
                rhs.at(rr, c) -= t * Y.at(k0 + kc, j0 + c);
              }
            }
          }
        }
      }
      // Small Sylvester: (I_js x T_ii + T_jj x I_is) vec(Y_ij) = vec(rhs)
      const std::int64_t sz = is * js;
      DenseMatrix Ksys(sz, sz);
      for (std::int64_t c = 0; c < js; ++c)
      {
        for (std::int64_t rr = 0; rr < is; ++rr)
        {
          const std::int64_t row = c * is + rr;
          for (std::int64_t rr2 = 0; rr2 < is; ++rr2)
          {
            Ksys.at(row, c * is + rr2) += T.at(i0 + rr, i0 + rr2);
          }
          for (std::int64_t c2 = 0; c2 < js; ++c2)
          {
            Ksys.at(row, c2 * is + rr) += T.at(j0 + c, j0 + c2);
          }
        }
      }
      DenseMatrix vecrhs(sz, 1);
      for (std::int64_t c = 0; c < js; ++c)
      {
        for (std::int64_t rr = 0; rr < is; ++rr)
        {
          vecrhs.at(c * is + rr, 0) = rhs.at(rr, c);
        }
      }
      const DenseMatrix sol = dense_solve(Ksys, vecrhs);
      for (std::int64_t c = 0; c < js; ++c)
      {
        for (std::int64_t rr = 0; rr < is; ++rr)
        {
          Y.at(i0 + rr, j0 + c) = sol.at(c * is + rr, 0);
        }
      }
    }
  }

  // P = Q Y Q^T, symmetrized.
  DenseMatrix P = matmul(Q, matmul(Y, transpose(Q)));
  for (std::int64_t j = 0; j < n; ++j)
  {
    for (std::int64_t i = 0; i < j; ++i)
    {
      const double s = 0.5 * (P.at(i, j) + P.at(j, i));
      P.at(i, j) = s;
      P.at(j, i) = s;
    }
  }
  return P;
}

} // namespace mor
