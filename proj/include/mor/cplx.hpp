// SPDX-License-Identifier: Apache-2.0
//
// Complex linear algebra for frequency-response evaluation: dense LU for
// reduced systems generated on the fly, banded LU for large sparse operators
// with a narrow band (the generated models are tridiagonal).

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace mor
{

struct SparseMatrix;
struct DenseMatrix;

using cxd = std::complex<double>;

/// Dense complex LU with partial pivoting.
class ZDenseLu
{
public:
  /// `a` is column-major n x n. When singular_ok, zero pivots are replaced by
  /// a tiny value so inverse iteration with a near-exact shift stays usable.
  static ZDenseLu factor(std::vector<cxd> a, std::int64_t n, bool singular_ok = false);

  void solve_in_place(cxd *b) const;
  std::vector<cxd> solve(std::vector<cxd> b) const;

  std::int64_t dim() const { return n_; }

private:
  std::int64_t n_ = 0;
  std::vector<cxd> lu_;
  std::vector<std::int64_t> piv_;
};

/// Banded complex LU with partial pivoting (band storage with kl extra fill
/// rows). Usable when the operator has a narrow band; the factor cost is
/// O(n b^2) and each solve O(n b).
class ZBandedLu
{
public:
  /// Factors s^2 M + s D + K for complex s from the three real CSR operands.
  static ZBandedLu factor_quadratic(const SparseMatrix &M, const SparseMatrix &D, const SparseMatrix &K, cxd s);

  void solve_in_place(cxd *b) const;

  std::int64_t dim() const { return n_; }
  std::int64_t bandwidth() const { return kl_; }

private:
  std::int64_t n_ = 0;
  std::int64_t kl_ = 0; // symmetric structural bandwidth before fill
  std::int64_t ldab_ = 0;
  std::vector<cxd> ab_;
  std::vector<std::int64_t> piv_;
};

std::int64_t bandwidth_of(const SparseMatrix &A);

/// Evaluator for H(s) = (Cp + s Cv) (s^2 M + s D + K)^{-1} F, returning the
/// q x m complex response. Chooses banded or dense factorization based on the
/// operator bandwidth.
class TransferFunction
{
public:
  TransferFunction(const SparseMatrix &M, const SparseMatrix &D, const SparseMatrix &K,
                   const DenseMatrix &F, const DenseMatrix &Cp, const DenseMatrix &Cv);

  std::vector<cxd> eval(cxd s) const; // column-major q x m
  double frob_sq(cxd s) const;        // ||H(s)||_F^2

  std::int64_t inputs() const { return m_; }
  std::int64_t outputs() const { return q_; }

private:
  const SparseMatrix *M_;
  const SparseMatrix *D_;
  const SparseMatrix *K_;
  const DenseMatrix *F_;
  const DenseMatrix *Cp_;
  const DenseMatrix *Cv_;
  std::int64_t n_ = 0, m_ = 0, q_ = 0;
  bool banded_ = false;
};

/// (1/pi) * integral_0^inf g(w) dw for a nonnegative density g (typically
/// ||H(iw)||_F^2), by adaptive trapezoid refinement on [0, omega_max] with
/// omega_max doubling from omega_hint until the last octave contributes less
/// than tail_rtol of the running total.
double h2_from_density(const std::function<double(double)> &g, double omega_hint, double rel_tol = 1e-7,
                       double tail_rtol = 1e-4);

} // namespace mor
