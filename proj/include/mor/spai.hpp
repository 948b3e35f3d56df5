// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mor/sparse.hpp"

namespace mor
{

/// One sparse-approximate-inverse factor: either a base preconditioner P
/// minimizing ||I - K P||_F, or an update factor Q minimizing
/// ||K_old - K_new Q||_F, both column by column.
struct SpaiFactor
{
  enum class Kind
  {
    base,
    update,
  };
  SparseMatrix matrix;
  std::vector<double> target_frob_residual; // final per-column ||r||
  double build_seconds = 0.0;
  Kind kind = Kind::base;
};

struct SpaiOptions
{
  double tol = 0.01;
  std::int64_t max_col_iters = 50;
  /// sequential: the d = P r step sees previously refined columns (the
  /// literal reading of the column loop). frozen: P is frozen at alpha I for
  /// the d step, which makes columns independent and safe to run in parallel.
  enum class Mode
  {
    sequential,
    frozen,
  } mode = Mode::sequential;
  /// worker threads for frozen mode; <= 1 runs single threaded
  std::int64_t threads = 1;
};

/// Algorithm: start from P = alpha I with alpha = trace(K) / trace(K K^T),
/// then per column run the minimal-residual refinement
///   d = P r, w = K d, a = (r,w)/(w,w), p += a d, r -= a w
/// until ||r|| <= tol. Throws StagnationError when a column cannot reach tol
/// within max_col_iters or when (w,w) vanishes, NumericalError on non-finite
/// values.
SpaiFactor spai_build(const SparseMatrix &K, const SpaiOptions &opts = {});

/// Update factor for a shifted operator: minimizes ||K_old - K_new Q||_F with
/// the initial guess Q = alpha I,
/// alpha = (1/2) trace(K_old^T K_new + K_new^T K_old) / trace(K_new^T K_new),
/// and the same per-column loop with e_j replaced by the j-th column of
/// K_old. Identical operands return the identity factor with zero inner
/// iterations.
SpaiFactor spai_update(const SparseMatrix &K_old, const SparseMatrix &K_new, const SpaiOptions &opts = {});

/// Ordered product of factors, newest first: [Q(z), Q(z-1), ..., Q(2), P(1)].
/// Applying the chain never forms the matrix product; each factor costs one
/// spmv.
struct PreconditionerChain
{
  std::vector<SpaiFactor> factors;

  bool empty() const { return factors.empty(); }
  std::int64_t dim() const { return factors.empty() ? 0 : factors.front().matrix.nrows; }

  /// Pushes the newest factor (becomes factors.front()).
  void push_newest(SpaiFactor f);
};

/// Applies factors right-to-left of the written product: P(1) first, Q(z)
/// last. The empty chain is the identity.
std::vector<double> chain_apply(const PreconditionerChain &chain, std::span<const double> v);

/// Stochastic estimate of ||I - K P_chain||_F from `samples` unit-norm
/// Gaussian probes: sqrt((n / samples) * sum_k ||(I - K chain) g_k||^2).
/// Deterministic for a fixed seed.
double chain_quality(const PreconditionerChain &chain, const SparseMatrix &K, std::int64_t samples,
                     std::uint64_t seed = 42);

/// Matrix Market round trip for factor inspection.
void export_factor(const std::filesystem::path &path, const SpaiFactor &factor);
SpaiFactor import_factor(const std::filesystem::path &path, SpaiFactor::Kind kind);

} // namespace mor
