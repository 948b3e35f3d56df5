// SPDX-License-Identifier: Apache-2.0
//
// Adaptive iterative rational global Arnoldi driver: builds an orthonormal
// basis from moment blocks at adaptively selected expansion points, projects,
// and iterates until the H2 distance between consecutive reduced systems
// drops below tolerance. Linear solves go through a pluggable backend
// (direct LU, plain CG, CG with a sparse-approximate-inverse preconditioner,
// or CG with the cheap cross-iteration preconditioner update).

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mor/cplx.hpp"
#include "mor/krylov.hpp"
#include "mor/spai.hpp"
#include "mor/system.hpp"

namespace mor
{

struct MomentBlock
{
  std::int64_t point_index = 0;
  std::int64_t order = 0; // j
  DenseMatrix data;       // n x m
};

struct OrthonormalBasis
{
  std::vector<DenseMatrix> blocks; // V_1..V_J, unit Frobenius norm each
  DenseMatrix assembled;           // n x r after the final QR
};

struct AirgaConfig
{
  enum class Solver
  {
    direct,
    cg_plain,
    cg_spai,
    cg_spai_update,
  };
  enum class H2Method
  {
    lyapunov,
    quadrature,
  };

  std::int64_t r_max = 30;
  ExpansionPointSet initial_points = linspace_points(1.0, 100.0, 3);
  double outer_tol = 1e-6;
  double inner_tol = 1e-6;
  Solver solver = Solver::direct;
  double spai_tol = 0.01;
  std::int64_t spai_max_col_iters = 50;
  SpaiOptions::Mode spai_mode = SpaiOptions::Mode::sequential;
  double cg_rtol = 1e-10;
  std::int64_t cg_maxit_factor = 10; // maxit = factor * n
  std::int64_t update_start_iteration = 3;
  std::int64_t max_outer = 20;
  H2Method h2_method = H2Method::lyapunov;
  std::uint64_t seed = 42;
};

const char *solver_name(AirgaConfig::Solver s);

/// One linear-system solve (all m right-hand sides) with its ledger payload.
struct SolveRecord
{
  std::int64_t outer = 0;       // z
  std::int64_t inner = 0;       // j; 0 for the zeroth-moment solves
  std::int64_t point_index = 0; // i
  double point = 0.0;
  std::int64_t cg_iterations = 0; // summed over columns; 0 for direct
  double solve_seconds = 0.0;
  bool converged = true;
  DenseMatrix X;   // raw solution block (pre-QR, pre-deflation)
  DenseMatrix eta; // recurrence residual block; zero for direct solves
};

struct PrecondRecord
{
  std::int64_t outer = 0;
  std::int64_t point_index = 0;
  double point = 0.0;
  double seconds = 0.0;
  SpaiFactor::Kind kind = SpaiFactor::Kind::base;
  std::int64_t chain_length = 0;
};

struct OuterRecord
{
  std::int64_t outer = 0;
  std::vector<double> points;
  std::vector<double> moment_errors; // final estimates of the iteration
  double h2_delta = 0.0;             // vs previous outer reduced model
  std::int64_t inner_steps = 0;      // J
  double projection_seconds = 0.0;
  std::int64_t r = 0;
  bool h2_used_quadrature_fallback = false;
  bool points_padded = false;
};

/// Maps basis block V_{j+1} to the solve that produced its moment block.
struct LedgerEntry
{
  std::int64_t order = 0;       // j
  std::int64_t point_index = 0; // t_j
  double point = 0.0;
  std::int64_t solve_record = -1;
};

struct RunTrace
{
  AirgaConfig config;
  std::vector<SolveRecord> solve_records;
  std::vector<PrecondRecord> precond_records;
  std::vector<OuterRecord> outer_records;
  std::vector<LedgerEntry> final_ledger;       // selection sequence of the final outer iteration
  std::vector<DenseMatrix> final_basis_blocks; // V_1..V_J of the final outer iteration
  std::int64_t outer_iterations = 0;
  bool converged = false;
  double total_seconds = 0.0;
  std::string kernel_variant;
};

/// Linear-solve strategy: prepare() assembles the shifted operators (and any
/// preconditioners) for the outer iteration's points, solve() runs one
/// multi-right-hand-side solve against point i.
class SolveBackend
{
public:
  virtual ~SolveBackend() = default;
  virtual void prepare(const SecondOrderSystem &sys, const std::vector<double> &points, std::int64_t outer,
                       std::vector<PrecondRecord> *records) = 0;
  virtual BlockSolveResult solve(std::int64_t point_index, const DenseMatrix &rhs) = 0;
  /// True when solve() produces meaningful residual blocks (iterative).
  virtual bool provides_residuals() const = 0;
};

std::unique_ptr<SolveBackend> make_backend(const AirgaConfig &cfg);

// --- operations -----------------------------------------------------------

struct ZerothResult
{
  std::vector<MomentBlock> blocks; // QR-orthonormalized X^(0)(s_i)
  std::vector<SolveRecord> records;
};

/// Solves K_i X = F for every point and replaces each block by its thin-QR Q
/// factor. Solver failures are annotated with the point index.
ZerothResult zeroth_moments(const SecondOrderSystem &sys, const ExpansionPointSet &pts, SolveBackend &backend);

/// Index of the maximum entry; ties break to the smallest index.
std::int64_t select_point(std::span<const double> moment_errors);

/// Solves K(point) X = -M Vj for the selected point.
struct MomentResult
{
  MomentBlock block;
  SolveRecord record;
};
MomentResult next_moment(const SecondOrderSystem &sys, std::int64_t point_index, double point, const DenseMatrix &Vj,
                         SolveBackend &backend);

/// Global-Arnoldi deflation of X against unit-Frobenius basis blocks with the
/// trace inner product: one sweep plus one reorthogonalization sweep. Returns
/// the accumulated coefficients, one per basis block.
std::vector<double> arnoldi_deflate(DenseMatrix &X, std::span<const DenseMatrix> basis_blocks);

/// Post-deflation Frobenius norm per point: the magnitude of the moment
/// direction not yet captured by the basis.
std::vector<double> moment_error_estimates(std::span<const MomentBlock> blocks);

/// Galerkin projection onto the assembled basis.
ReducedSystem project_reduce(const SecondOrderSystem &sys, const OrthonormalBasis &basis);

/// H2 norm of a reduced system. The Lyapunov route converts to first order
/// and solves A P + P A^T + B B^T = 0; non-Hurwitz systems fall back to
/// quadrature (flag reported through used_fallback).
double h2_norm(const ReducedSystem &rs, AirgaConfig::H2Method method = AirgaConfig::H2Method::lyapunov,
               bool *used_fallback = nullptr);

/// H2 norm of the difference of two reduced systems (block-diagonal
/// realization with C = [C1, -C2]).
double h2_distance(const ReducedSystem &a, const ReducedSystem &b,
                   AirgaConfig::H2Method method = AirgaConfig::H2Method::lyapunov, bool *used_fallback = nullptr);

/// (Cph + s Cvh)(s^2 Mh + s Dh + Kh)^{-1} Fh as a column-major q x m block.
std::vector<cxd> reduced_transfer(const ReducedSystem &rs, cxd s);

/// New expansion points from the reduced quadratic eigenvalue problem:
/// eigenvalues of lambda^2 Mh + lambda Dh + Kh, real parts of the complex
/// pairs (the adaptive protocol; degenerate all-real spectra fall back to
/// |lambda|), deduplicated at relative gap 1e-8, ascending, l smallest
/// strictly positive. Short sets are padded from `previous` and flagged.
ExpansionPointSet refresh_points(const ReducedSystem &rs, std::int64_t l, const ExpansionPointSet &previous);

struct AirgaResult
{
  ReducedSystem reduced;
  RunTrace trace;
};

AirgaResult airga_run(const SecondOrderSystem &sys, const AirgaConfig &cfg);

} // namespace mor
