// SPDX-License-Identifier: Apache-2.0

#include "mor/spai.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "mor/errors.hpp"
#include "mor/model_io.hpp"

namespace mor
{

namespace
{

/// Sparse accumulator over a fixed dimension: dense value array plus an
/// occupancy list, cleared in O(support).
class Spa
{
public:
  explicit Spa(std::int64_t n) : val_(static_cast<std::size_t>(n), 0.0), in_(static_cast<std::size_t>(n), false) {}

  void add(std::int64_t i, double v)
  {
    if (!in_[static_cast<std::size_t>(i)])
    {
      in_[static_cast<std::size_t>(i)] = true;
      idx_.push_back(i);
    }
    val_[static_cast<std::size_t>(i)] += v;
  }

  double operator[](std::int64_t i) const { return val_[static_cast<std::size_t>(i)]; }

  std::span<const std::int64_t> support() const { return idx_; }

  void sort_support() { std::sort(idx_.begin(), idx_.end()); }

  void clear()
  {
    for (const std::int64_t i : idx_)
    {
      val_[static_cast<std::size_t>(i)] = 0.0;
      in_[static_cast<std::size_t>(i)] = false;
    }
    idx_.clear();
  }

  double norm_sq_sorted()
  {
    sort_support();
    double acc = 0.0;
    for (const std::int64_t i : idx_)
    {
      acc += val_[static_cast<std::size_t>(i)] * val_[static_cast<std::size_t>(i)];
    }
    return acc;
  }

private:
  std::vector<double> val_;
  std::vector<bool> in_;
  std::vector<std::int64_t> idx_;
};

// Sorted-support dot of two accumulators, accumulated over the support of a.
double spa_dot(Spa &a, const Spa &b)
{
  a.sort_support();
  double acc = 0.0;
  for (const std::int64_t i : a.support())
  {
    acc += a[i] * b[i];
  }
  return acc;
}

/// Column-compressed view used by the minimal-residual loop: K columns come
/// from the explicit transpose built once per factor construction.
struct ColView
{
  const SparseMatrix *t; // transpose of the operand

  void axpy_col(double a, std::int64_t j, Spa &out) const
  {
    for (std::int64_t k = t->row_ptr[static_cast<std::size_t>(j)]; k < t->row_ptr[static_cast<std::size_t>(j) + 1];
         ++k)
    {
      out.add(t->col_idx[static_cast<std::size_t>(k)], a * t->values[static_cast<std::size_t>(k)]);
    }
  }
};

struct ColumnStore
{
  std::vector<std::vector<std::pair<std::int64_t, double>>> cols; // sorted by index
  std::vector<char> built;

  explicit ColumnStore(std::int64_t n) : cols(static_cast<std::size_t>(n)), built(static_cast<std::size_t>(n), 0) {}
};

struct ColumnOutcome
{
  double final_residual = 0.0;
};

// Runs the per-column loop for column j. `rhs_col` supplies the target column
// (e_j for the base build, k_old(:, j) for the update).
ColumnOutcome build_column(std::int64_t j, std::int64_t n, double alpha, const ColView &K_cols,
                           const std::function<void(Spa &)> &load_rhs, const SpaiOptions &opts, ColumnStore &store,
                           SpaiFactor::Kind kind)
{
  Spa p(n), r(n), d(n), w(n);

  // p = alpha e_j ; r = rhs - K p
  p.add(j, alpha);
  load_rhs(r);
  K_cols.axpy_col(-alpha, j, r);

  const double tol_sq = opts.tol * opts.tol;
  double rnorm_sq = r.norm_sq_sorted();
  std::int64_t iters = 0;
  while (rnorm_sq > tol_sq)
  {
    if (iters >= opts.max_col_iters)
    {
      throw StagnationError("spai: column " + std::to_string(j) + " stalled at ||r|| = " +
                                std::to_string(std::sqrt(rnorm_sq)) + " after " + std::to_string(iters) +
                                " iterations (tol " + std::to_string(opts.tol) + ")",
                            j);
    }
    // d = P r with P the current global iterate (sequential mode) or alpha I
    // (frozen mode).
    d.clear();
    r.sort_support();
    for (const std::int64_t i : r.support())
    {
      const double ri = r[i];
      if (ri == 0.0)
      {
        continue;
      }
      if (opts.mode == SpaiOptions::Mode::sequential && store.built[static_cast<std::size_t>(i)])
      {
        for (const auto &[row, v] : store.cols[static_cast<std::size_t>(i)])
        {
          d.add(row, ri * v);
        }
      }
      else
      {
        d.add(i, alpha * ri);
      }
    }
    // w = K d
    w.clear();
    d.sort_support();
    for (const std::int64_t i : d.support())
    {
      const double di = d[i];
      if (di != 0.0)
      {
        K_cols.axpy_col(di, i, w);
      }
    }
    const double ww = spa_dot(w, w);
    const double rw = spa_dot(w, r); // support of w; (r, w) touches the same terms
    if (!(ww > 0.0))
    {
      if (!std::isfinite(ww))
      {
        throw NumericalError("spai: non-finite values in column " + std::to_string(j));
      }
      throw StagnationError("spai: zero curvature in column " + std::to_string(j) + " with ||r|| > tol", j);
    }
    const double a = rw / ww;
    if (!std::isfinite(a))
    {
      throw NumericalError("spai: non-finite step in column " + std::to_string(j));
    }
    for (const std::int64_t i : d.support())
    {
      p.add(i, a * d[i]);
    }
    for (const std::int64_t i : w.support())
    {
      r.add(i, -a * w[i]);
    }
    rnorm_sq = r.norm_sq_sorted();
    ++iters;
  }

  auto &col = store.cols[static_cast<std::size_t>(j)];
  col.clear();
  p.sort_support();
  for (const std::int64_t i : p.support())
  {
    if (p[i] != 0.0)
    {
      col.emplace_back(i, p[i]);
    }
  }
  (void)kind;
  return {std::sqrt(rnorm_sq)};
}

SpaiFactor assemble(std::int64_t n, ColumnStore &store, std::vector<double> residuals, double seconds,
                    SpaiFactor::Kind kind)
{
  std::vector<SparseMatrix::Triplet> t;
  std::size_t total = 0;
  for (const auto &c : store.cols)
  {
    total += c.size();
  }
  t.reserve(total);
  for (std::int64_t j = 0; j < n; ++j)
  {
    for (const auto &[i, v] : store.cols[static_cast<std::size_t>(j)])
    {
      t.push_back({i, j, v});
    }
  }
  SpaiFactor f;
  f.matrix = SparseMatrix::from_triplets(n, n, std::move(t));
  f.target_frob_residual = std::move(residuals);
  f.build_seconds = seconds;
  f.kind = kind;
  return f;
}

SpaiFactor run_build(const SparseMatrix &K_apply, const SparseMatrix *rhs_source, double alpha,
                     const SpaiOptions &opts, SpaiFactor::Kind kind)
{
  const std::int64_t n = K_apply.nrows;
  const auto t0 = std::chrono::steady_clock::now();
  const SparseMatrix K_t = transpose(K_apply);
  const SparseMatrix rhs_t = rhs_source ? transpose(*rhs_source) : SparseMatrix{};
  const ColView cols{&K_t};
  const ColView rhs_cols{rhs_source ? &rhs_t : nullptr};

  ColumnStore store(n);
  std::vector<double> residuals(static_cast<std::size_t>(n), 0.0);

  const auto run_one = [&](std::int64_t j) {
    const auto load_rhs = [&](Spa &r) {
      if (rhs_source)
      {
        rhs_cols.axpy_col(1.0, j, r);
      }
      else
      {
        r.add(j, 1.0);
      }
    };
    const ColumnOutcome oc = build_column(j, n, alpha, cols, load_rhs, opts, store, kind);
    residuals[static_cast<std::size_t>(j)] = oc.final_residual;
  };

  if (opts.mode == SpaiOptions::Mode::frozen && opts.threads > 1)
  {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(opts.threads));
    const std::int64_t nt = opts.threads;
    for (std::int64_t t = 0; t < nt; ++t)
    {
      pool.emplace_back([&, t]() {
        try
        {
          for (std::int64_t j = t; j < n; j += nt)
          {
            run_one(j);
            store.built[static_cast<std::size_t>(j)] = 1;
          }
        }
        catch (...)
        {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto &th : pool)
    {
      th.join();
    }
    for (const auto &e : errors)
    {
      if (e)
      {
        std::rethrow_exception(e);
      }
    }
  }
  else
  {
    for (std::int64_t j = 0; j < n; ++j)
    {
      run_one(j);
      store.built[static_cast<std::size_t>(j)] = 1;
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  return assemble(n, store, std::move(residuals),
                  std::chrono::duration<double>(t1 - t0).count(), kind);
}

} // namespace

SpaiFactor spai_build(const SparseMatrix &K, const SpaiOptions &opts)
{
  if (K.nrows != K.ncols)
  {
    throw ArgumentError("spai_build: K must be square");
  }
  if (!(opts.tol > 0.0))
  {
    throw ArgumentError("spai_build: tol must be positive");
  }
  const double denom = trace_inner(K, K);
  if (!(denom > 0.0))
  {
    throw NumericalError("spai_build: trace(K K^T) is not positive");
  }
  const double alpha = trace(K) / denom;
  return run_build(K, nullptr, alpha, opts, SpaiFactor::Kind::base);
}

SpaiFactor spai_update(const SparseMatrix &K_old, const SparseMatrix &K_new, const SpaiOptions &opts)
{
  if (K_old.nrows != K_old.ncols || K_new.nrows != K_new.ncols || K_old.nrows != K_new.nrows)
  {
    throw ArgumentError("spai_update: operands must be square with equal shape");
  }
  if (!(opts.tol > 0.0))
  {
    throw ArgumentError("spai_update: tol must be positive");
  }
  const double denom = trace_inner(K_new, K_new);
  if (!(denom > 0.0))
  {
    throw NumericalError("spai_update: trace(K_new^T K_new) is not positive");
  }
  const double alpha = 0.5 * (trace_inner(K_old, K_new) + trace_inner(K_new, K_old)) / denom;
  return run_build(K_new, &K_old, alpha, opts, SpaiFactor::Kind::update);
}

void PreconditionerChain::push_newest(SpaiFactor f)
{
  if (!factors.empty() && factors.front().matrix.nrows != f.matrix.nrows)
  {
    throw ArgumentError("PreconditionerChain: factor dimension mismatch");
  }
  factors.insert(factors.begin(), std::move(f));
}

std::vector<double> chain_apply(const PreconditionerChain &chain, std::span<const double> v)
{
  if (!chain.empty() && chain.dim() != static_cast<std::int64_t>(v.size()))
  {
    throw ArgumentError("chain_apply: dimension mismatch");
  }
  std::vector<double> x(v.begin(), v.end());
  for (auto it = chain.factors.rbegin(); it != chain.factors.rend(); ++it)
  {
    x = spmv(it->matrix, x);
  }
  return x;
}

double chain_quality(const PreconditionerChain &chain, const SparseMatrix &K, std::int64_t samples,
                     std::uint64_t seed)
{
  if (samples < 1)
  {
    throw ArgumentError("chain_quality: samples must be >= 1");
  }
  const std::int64_t n = K.nrows;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double acc = 0.0;
  std::vector<double> g(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < samples; ++k)
  {
    double nrm = 0.0;
    for (double &gi : g)
    {
      gi = gauss(rng);
      nrm += gi * gi;
    }
    nrm = std::sqrt(nrm);
    for (double &gi : g)
    {
      gi /= nrm;
    }
    const std::vector<double> pg = chain_apply(chain, g);
    const std::vector<double> kpg = spmv(K, pg);
    for (std::int64_t i = 0; i < n; ++i)
    {
      const double e = g[static_cast<std::size_t>(i)] - kpg[static_cast<std::size_t>(i)];
      acc += e * e;
    }
  }
  return std::sqrt(static_cast<double>(n) / static_cast<double>(samples) * acc);
}

void export_factor(const std::filesystem::path &path, const SpaiFactor &factor)
{
  write_mm(path, factor.matrix);
}

SpaiFactor import_factor(const std::filesystem::path &path, SpaiFactor::Kind kind)
{
  SpaiFactor f;
  f.matrix = read_mm(path);
  f.kind = kind;
  return f;
}

} // namespace mor
