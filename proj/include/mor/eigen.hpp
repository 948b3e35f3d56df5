// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mor/dense.hpp"

namespace mor
{

struct SchurResult
{
  DenseMatrix Q; // orthogonal
  DenseMatrix T; // quasi upper triangular, 2x2 blocks only for complex pairs
};

/// Real Schur decomposition A = Q T Q^T via Hessenberg reduction and Francis
/// double-shift QR. Throws ConvergenceError after 30 n sweeps.
SchurResult real_schur(const DenseMatrix &A);

/// Eigenvalues of a quasi upper triangular T, in diagonal order.
std::vector<std::complex<double>> quasi_triangular_eigenvalues(const DenseMatrix &T);

struct Spectrum
{
  // (re, im); complex values appear as constructed conjugate pairs, ordering
  // ascending by real part then imaginary part.
  std::vector<std::pair<double, double>> eigenvalues;
  // scaled quadratic residuals, filled when residuals were requested
  std::vector<double> residual_norms;
};

/// Eigenvalues of lambda^2 Mh + lambda Dh + Kh through the companion
/// linearization [[0, I], [-Mh^{-1} Kh, -Mh^{-1} Dh]]. When with_residuals,
/// eigenvectors are recovered by inverse iteration and residual_norms[i] holds
/// ||(l^2 Mh + l Dh + Kh) v|| / (|l|^2 ||Mh|| + |l| ||Dh|| + ||Kh||) with
/// ||v|| = 1.
Spectrum quad_eig(const DenseMatrix &Mh, const DenseMatrix &Dh, const DenseMatrix &Kh, bool with_residuals = false);

/// Solves A P + P A^T + W = 0 for symmetric W and Hurwitz A
/// (Bartels–Stewart on the real Schur form). Throws StabilityError when A has
/// an eigenvalue with nonnegative real part.
DenseMatrix lyap_solve(const DenseMatrix &A, const DenseMatrix &W);

} // namespace mor
