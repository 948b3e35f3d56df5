// SPDX-License-Identifier: Apache-2.0

#include "mor/diagnostics.hpp"

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

/// Factorization of K(s) = s^2 M + s D + K and its conjugate transpose,
/// banded when the operators allow it.
class KFactor
{
public:
  KFactor(const SecondOrderSystem &sys, cxd s, bool with_adjoint)
  {
    const std::int64_t bw = std::max({bandwidth_of(sys.M), bandwidth_of(sys.D), bandwidth_of(sys.K)});
    banded_ = bw <= 64;
    if (banded_)
    {
      fwd_band_.emplace(ZBandedLu::factor_quadratic(sys.M, sys.D, sys.K, s));
      if (with_adjoint)
      {
        const SparseMatrix Mt = transpose(sys.M);
        const SparseMatrix Dt = transpose(sys.D);
        const SparseMatrix Kt = transpose(sys.K);
        adj_band_.emplace(ZBandedLu::factor_quadratic(Mt, Dt, Kt, std::conj(s)));
      }
    }
    else
    {
      const std::int64_t n = sys.order();
      if (n > 1024)
      {
        throw ArgumentError("diagnostics: operator too large for dense factorization and band too wide");
      }
      fwd_dense_.emplace(factor_dense(sys, s, false));
      if (with_adjoint)
      {
        adj_dense_.emplace(factor_dense(sys, s, true));
      }
    }
  }

  void solve(cxd *b) const
  {
    if (banded_)
    {
      fwd_band_->solve_in_place(b);
    }
    else
    {
      fwd_dense_->solve_in_place(b);
    }
  }

  void solve_adjoint(cxd *b) const
  {
    if (banded_)
    {
      adj_band_->solve_in_place(b);
    }
    else
    {
      adj_dense_->solve_in_place(b);
    }
  }

private:
  static ZDenseLu factor_dense(const SecondOrderSystem &sys, cxd s, bool adjoint)
  {
    const std::int64_t n = sys.order();
    std::vector<cxd> A(static_cast<std::size_t>(n * n), cxd(0.0, 0.0));
    const cxd ss = adjoint ? std::conj(s) : s;
    const cxd s2 = ss * ss;
    auto scatter = [&](const SparseMatrix &S, cxd w) {
      for (std::int64_t i = 0; i < n; ++i)
      {
        for (std::int64_t k = S.row_ptr[static_cast<std::size_t>(i)]; k < S.row_ptr[static_cast<std::size_t>(i) + 1];
             ++k)
        {
          const std::int64_t c = S.col_idx[static_cast<std::size_t>(k)];
          // adjoint stores the transpose
          const std::int64_t row = adjoint ? c : i;
          const std::int64_t col = adjoint ? i : c;
          A[static_cast<std::size_t>(col * n + row)] += w * S.values[static_cast<std::size_t>(k)];
        }
      }
    };
    scatter(sys.M, s2);
    scatter(sys.D, ss);
    scatter(sys.K, cxd(1.0, 0.0));
    return ZDenseLu::factor(std::move(A), n);
  }

  bool banded_ = false;
  std::optional<ZBandedLu> fwd_band_, adj_band_;
  std::optional<ZDenseLu> fwd_dense_, adj_dense_;
};

/// Largest singular value of K(iw)^{-1} = 1 / sigma_min(K(iw)) by inverse
/// power iteration on K^H K: v <- K^{-1} (K^{-H} v). Returns +inf when the
/// factorization hits an exactly singular pivot.
double inv_norm_at(const SecondOrderSystem &sys, double omega)
{
  const std::int64_t n = sys.order();
  try
  {
    const KFactor f(sys, cxd(0.0, omega), /*with_adjoint=*/true);
    std::vector<cxd> v(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
    {
      v[static_cast<std::size_t>(i)] = cxd(1.0 + 0.29 * static_cast<double>(i % 11), 0.17 * static_cast<double>(i % 7));
    }
    double nrm = 0.0;
    for (const cxd &x : v)
    {
      nrm += std::norm(x);
    }
    nrm = std::sqrt(nrm);
    for (cxd &x : v)
    {
      x /= nrm;
    }
    double lam = 0.0;
    for (int it = 0; it < 100; ++it)
    {
      std::vector<cxd> w = v;
      f.solve_adjoint(w.data()); // w = K^{-H} v
      f.solve(w.data());         // w = K^{-1} K^{-H} v
      double wn = 0.0;
      for (const cxd &x : w)
      {
        wn += std::norm(x);
      }
      wn = std::sqrt(wn);
      if (wn == 0.0)
      {
        return 0.0;
      }
      const double prev = lam;
      lam = wn; // Rayleigh-style magnitude estimate of lambda_max(K^{-1} K^{-H})
      for (std::int64_t i = 0; i < n; ++i)
      {
        v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / wn;
      }
      if (it > 4 && std::abs(lam - prev) <= 1e-10 * lam)
      {
        break;
      }
    }
    return std::sqrt(lam);
  }
  catch (const SingularMatrixError &)
  {
    return std::numeric_limits<double>::infinity();
  }
}

} // namespace

ResidualLedger build_ledger(const RunTrace &trace)
{
  if (trace.config.solver == AirgaConfig::Solver::direct)
  {
    throw ValidationError("build_ledger: no residual ledger (direct solver trace)");
  }
  if (trace.final_ledger.empty())
  {
    throw ValidationError("build_ledger: trace carries no selection sequence");
  }
  ResidualLedger led;
  for (const LedgerEntry &e : trace.final_ledger)
  {
    if (e.solve_record < 0 || e.solve_record >= static_cast<std::int64_t>(trace.solve_records.size()))
    {
      throw ValidationError("build_ledger: dangling solve record reference");
    }
    const SolveRecord &rec = trace.solve_records[static_cast<std::size_t>(e.solve_record)];
    led.orders.push_back(e.order);
    led.selected_points.push_back(e.point);
    led.moment_blocks.push_back(rec.X);
    led.residual_blocks.push_back(rec.eta);
  }
  return led;
}

PerturbationEstimate compute_Z(const ResidualLedger &ledger, std::int64_t max_order)
{
  const std::int64_t J = ledger.count();
  if (J == 0)
  {
    throw ArgumentError("compute_Z: empty ledger");
  }
  const std::int64_t n = ledger.moment_blocks.front().nrows;
  const std::int64_t m = ledger.moment_blocks.front().ncols;
  if (n > max_order)
  {
    throw ArgumentError("compute_Z: system order " + std::to_string(n) + " exceeds the dense-Z guard of " +
                        std::to_string(max_order));
  }
  if (m * J >= n)
  {
    throw ArgumentError("compute_Z: mJ >= n, the system is not under-determined");
  }

  DenseMatrix X(n, m * J);
  DenseMatrix eta(n, m * J);
  for (std::int64_t j = 0; j < J; ++j)
  {
    const DenseMatrix &xb = ledger.moment_blocks[static_cast<std::size_t>(j)];
    const DenseMatrix &rb = ledger.residual_blocks[static_cast<std::size_t>(j)];
    std::copy(xb.values.begin(), xb.values.end(), X.values.begin() + j * m * n);
    std::copy(rb.values.begin(), rb.values.end(), eta.values.begin() + j * m * n);
  }

  const QrResult qr = thin_qr(X);
  if (qr.rank < m * J)
  {
    std::vector<std::int64_t> deficient;
    for (std::int64_t k = 0; k < qr.R.ncols; ++k)
    {
      if (qr.R.at(k, k) == 0.0)
      {
        deficient.push_back(k);
      }
    }
    throw RankError("compute_Z: stacked moment block is rank deficient", std::move(deficient));
  }

  // Z = -eta X^+ = -(eta R^{-1}) Q^T; solve R^T U^T = ... via small triangular
  // systems: U = eta R^{-1}  <=>  U R = eta.
  DenseMatrix U(n, m * J);
  for (std::int64_t i = 0; i < n; ++i)
  {
    for (std::int64_t k = 0; k < m * J; ++k)
    {
      double acc = eta.at(i, k);
      for (std::int64_t t = 0; t < k; ++t)
      {
        acc -= U.at(i, t) * qr.R.at(t, k);
      }
      U.at(i, k) = acc / qr.R.at(k, k);
    }
  }
  PerturbationEstimate est;
  est.construction = PerturbationEstimate::Construction::min_norm_pseudoinverse;
  est.Z = matmul(U, transpose(qr.Q));
  for (double &v : est.Z.values)
  {
    v = -v;
  }

  // ||Z||_2 by power iteration on Z^T Z, fixed start, 30 steps.
  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
  {
    v[static_cast<std::size_t>(i)] = 1.0 + 0.41 * static_cast<double>(i % 13);
  }
  const auto &ops = kernels::active();
  double nrm = std::sqrt(ops.dot(v.data(), v.data(), v.size()));
  for (double &x : v)
  {
    x /= nrm;
  }
  double sigma = 0.0;
  for (int it = 0; it < 30; ++it)
  {
    const std::vector<double> zv = matvec(est.Z, v);
    std::vector<double> w = matvec(transpose(est.Z), zv);
    const double wn = std::sqrt(ops.dot(w.data(), w.data(), w.size()));
    if (wn == 0.0)
    {
      sigma = 0.0;
      break;
    }
    sigma = std::sqrt(wn);
    for (std::size_t i = 0; i < w.size(); ++i)
    {
      v[i] = w[i] / wn;
    }
  }
  est.z_norm = sigma;
  return est;
}

DenseMatrix check_galerkin_orthogonality(const std::vector<DenseMatrix> &basis_blocks, const ResidualLedger &ledger)
{
  const std::int64_t J = ledger.count();
  if (static_cast<std::int64_t>(basis_blocks.size()) != J)
  {
    throw ArgumentError("check_galerkin_orthogonality: basis and ledger sizes differ");
  }
  DenseMatrix G(J, J);
  for (std::int64_t t = 0; t < J; ++t)
  {
    for (std::int64_t j = 0; j < J; ++j)
    {
      G.at(t, j) = trace_inner(basis_blocks[static_cast<std::size_t>(t)],
                               ledger.residual_blocks[static_cast<std::size_t>(j)]);
    }
  }
  return G;
}

std::vector<double> default_frequency_grid(std::int64_t count, double lo, double hi)
{
  if (count < 2 || !(lo > 0.0) || !(hi > lo))
  {
    throw ArgumentError("default_frequency_grid: need count >= 2 and 0 < lo < hi");
  }
  std::vector<double> g(static_cast<std::size_t>(count));
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::int64_t i = 0; i < count; ++i)
  {
    g[static_cast<std::size_t>(i)] = lo * std::exp(step * static_cast<double>(i));
  }
  return g;
}

Theorem2Result check_theorem2(const SecondOrderSystem &sys, const PerturbationEstimate &Z,
                              const std::vector<double> &freq_grid)
{
  if (freq_grid.empty())
  {
    throw ArgumentError("check_theorem2: empty frequency grid");
  }
  std::vector<double> vals(freq_grid.size());
  std::size_t argmax = 0;
  for (std::size_t k = 0; k < freq_grid.size(); ++k)
  {
    vals[k] = inv_norm_at(sys, freq_grid[k]);
    if (vals[k] > vals[argmax])
    {
      argmax = k;
    }
  }
  double best = vals[argmax];
  // One bisection refinement around the grid maximum.
  if (std::isfinite(best))
  {
    if (argmax > 0)
    {
      best = std::max(best, inv_norm_at(sys, 0.5 * (freq_grid[argmax - 1] + freq_grid[argmax])));
    }
    if (argmax + 1 < freq_grid.size())
    {
      best = std::max(best, inv_norm_at(sys, 0.5 * (freq_grid[argmax] + freq_grid[argmax + 1])));
    }
  }

  Theorem2Result out;
  out.hinf_Kinv = best;
  out.condition_value = best * Z.z_norm;
  out.holds = std::isfinite(out.condition_value) && out.condition_value < 1.0;
  return out;
}

double theorem1_bound(const SecondOrderSystem &sys, const PerturbationEstimate &Z,
                      const std::vector<double> &freq_grid)
{
  const Theorem2Result t2 = check_theorem2(sys, Z, freq_grid);
  const double denom = 1.0 - t2.condition_value;
  if (!(denom > 0.0))
  {
    throw ArgumentError("theorem1_bound: stability condition fails, denominator is not positive");
  }

  const std::int64_t n = sys.order();
  const std::int64_t q = sys.outputs();
  const std::int64_t m = sys.inputs();

  // Density of ||C(iw) K(iw)^{-1}||_F^2 and grid max of ||K(iw)^{-1} F||_2.
  double hinf_KinvF = 0.0;
  std::vector<double> h2_density(freq_grid.size() + 1, 0.0);
  std::vector<double> grid(freq_grid.size() + 1, 0.0);
  std::copy(freq_grid.begin(), freq_grid.end(), grid.begin() + 1); // prepend w = 0

  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const double w = grid[k];
    const KFactor f(sys, cxd(0.0, w), /*with_adjoint=*/true);
    // rows of C K^{-1}: solve K^H y = C(iw)^H per output row
    double ck = 0.0;
    std::vector<cxd> y(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < q; ++r)
    {
      for (std::int64_t i = 0; i < n; ++i)
      {
        y[static_cast<std::size_t>(i)] = std::conj(cxd(sys.Cp.at(r, i), 0.0) + cxd(0.0, w) * sys.Cv.at(r, i));
      }
      f.solve_adjoint(y.data());
      for (const cxd &yi : y)
      {
        ck += std::norm(yi);
      }
    }
    h2_density[k] = ck;

    // ||K^{-1} F||_2: exact for m = 1, power iteration on the m x m Gram
    // otherwise.
    std::vector<std::vector<cxd>> cols(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j)
    {
      auto &xj = cols[static_cast<std::size_t>(j)];
      xj.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i)
      {
        xj[static_cast<std::size_t>(i)] = cxd(sys.F.at(i, j), 0.0);
      }
      f.solve(xj.data());
    }
    double sig;
    if (m == 1)
    {
      double acc = 0.0;
      for (const cxd &x : cols[0])
      {
        acc += std::norm(x);
      }
      sig = std::sqrt(acc);
    }
    else
    {
      std::vector<cxd> gram(static_cast<std::size_t>(m * m));
      for (std::int64_t a = 0; a < m; ++a)
      {
        for (std::int64_t b = 0; b < m; ++b)
        {
          cxd acc(0.0, 0.0);
          for (std::int64_t i = 0; i < n; ++i)
          {
            acc += std::conj(cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)]) *
                   cols[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
          }
          gram[static_cast<std::size_t>(b * m + a)] = acc;
        }
      }
      std::vector<cxd> v(static_cast<std::size_t>(m), cxd(1.0, 0.0));
      double lam = 0.0;
      for (int it = 0; it < 50; ++it)
      {
        std::vector<cxd> w2(static_cast<std::size_t>(m), cxd(0.0, 0.0));
        for (std::int64_t a = 0; a < m; ++a)
        {
          for (std::int64_t b = 0; b < m; ++b)
          {
            w2[static_cast<std::size_t>(a)] += gram[static_cast<std::size_t>(b * m + a)] * v[static_cast<std::size_t>(b)];
          }
        }
        double wn = 0.0;
        for (const cxd &x : w2)
        {
          wn += std::norm(x);
        }
        wn = std::sqrt(wn);
        if (wn == 0.0)
        {
          lam = 0.0;
          break;
        }
        lam = wn;
        for (cxd &x : w2)
        {
          x /= wn;
        }
        v = std::move(w2);
      }
      sig = std::sqrt(lam);
    }
    hinf_KinvF = std::max(hinf_KinvF, sig);
  }

  // Trapezoid over the (extended) grid for the H2 factor.
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
  {
    integral += 0.5 * (h2_density[k] + h2_density[k + 1]) * (grid[k + 1] - grid[k]);
  }
  const double h2_CKinv = std::sqrt(integral / 3.14159265358979323846);

  return h2_CKinv * hinf_KinvF * Z.z_norm / denom;
}

} // namespace mor
