// SPDX-License-Identifier: Apache-2.0
//
// Post-hoc stability analysis of inexact solves: collects the per-moment
// solver residuals of the selected expansion points, attributes them to a
// backward perturbation Z of the stiffness matrix (Z X = -eta), and evaluates
// the stability conditions relating ||Z|| to the transfer-function norms of
// the unperturbed model.

#pragma once

#include <cstdint>
#include <vector>

#include "mor/airga.hpp"
#include "mor/dense.hpp"
#include "mor/system.hpp"

namespace mor
{

struct ResidualLedger
{
  std::vector<std::int64_t> orders;     // 0 .. J-1
  std::vector<double> selected_points;  // s_{t_0} .. s_{t_{J-1}}
  std::vector<DenseMatrix> moment_blocks;   // raw solve outputs X, n x m each
  std::vector<DenseMatrix> residual_blocks; // recurrence residuals eta, n x m

  std::int64_t count() const { return static_cast<std::int64_t>(orders.size()); }
};

/// Extracts the ledger for the final outer iteration's selection sequence.
/// Traces from the direct solver carry no residual ledger and raise
/// ValidationError.
ResidualLedger build_ledger(const RunTrace &trace);

struct PerturbationEstimate
{
  enum class Construction
  {
    paper_formula,
    min_norm_pseudoinverse,
  };
  DenseMatrix Z; // n x n
  double z_norm = 0.0;
  Construction construction = Construction::min_norm_pseudoinverse;
};

/// Minimum-norm solution of Z X = -eta through the thin QR of the stacked
/// moment blocks (Z = -eta X^+). Requires mJ < n and X of full column rank
/// (RankError otherwise). The 2-norm estimate comes from 30 power-iteration
/// steps on Z^T Z with a fixed deterministic start. Z is formed densely and
/// guarded to desk scale.
PerturbationEstimate compute_Z(const ResidualLedger &ledger, std::int64_t max_order = 500);

/// J x J block-trace matrix G(t, j) = trace(V_{t+1}^T eta_{j t_j}). For
/// Ritz-Galerkin solves with x0 = 0 the (j+1, j) entries are predicted to be
/// near zero; the matrix is reported rather than asserted because right
/// preconditioning moves the orthogonality to the preconditioned space.
DenseMatrix check_galerkin_orthogonality(const std::vector<DenseMatrix> &basis_blocks, const ResidualLedger &ledger);

std::vector<double> default_frequency_grid(std::int64_t count = 200, double lo = 1e-2, double hi = 1e4);

struct Theorem2Result
{
  double hinf_Kinv = 0.0;       // max over the grid of ||K(iw)^{-1}||_2
  double condition_value = 0.0; // hinf_Kinv * ||Z||
  bool holds = false;           // condition_value < 1
};

/// Stability condition ||K(s)^{-1}||_Hinf * ||Z|| < 1 with the Hinf factor
/// approximated as a grid maximum (refined once by bisection around the
/// maximum); singular K(iw) reports an infinite factor.
Theorem2Result check_theorem2(const SecondOrderSystem &sys, const PerturbationEstimate &Z,
                              const std::vector<double> &freq_grid);

/// Right-hand side of the perturbation bound
///   ||H - Ht||_H2 <= ||C K^{-1}||_H2 ||K^{-1} F||_Hinf ||Z|| / (1 - ||K^{-1}||_Hinf ||Z||),
/// with H2 factors integrated over the grid and Hinf factors taken as grid
/// maxima. Throws ArgumentError when the denominator is not positive.
double theorem1_bound(const SecondOrderSystem &sys, const PerturbationEstimate &Z,
                      const std::vector<double> &freq_grid);

} // namespace mor
