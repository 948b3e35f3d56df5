// SPDX-License-Identifier: Apache-2.0

#include "mor/system.hpp"

#include <cmath>

#include "mor/errors.hpp"

namespace mor
{

void SecondOrderSystem::validate() const
{
  const std::int64_t n = K.nrows;
  if (K.ncols != n || M.nrows != n || M.ncols != n || D.nrows != n || D.ncols != n)
  {
    throw ValidationError("system: M, D, K must be square with equal dimension");
  }
  if (F.nrows != n)
  {
    throw ValidationError("system: F row count does not match the system order");
  }
  if (Cp.ncols != n || (Cv.values.size() != 0 && Cv.ncols != n))
  {
    throw ValidationError("system: output matrices must have n columns");
  }
  if (Cv.values.size() != 0 && Cv.nrows != Cp.nrows)
  {
    throw ValidationError("system: Cp and Cv row counts differ");
  }
  if (proportional)
  {
    const SparseMatrix combo = sp_add_scaled(M, K, alpha, beta);
    const SparseMatrix diff = sp_add_scaled(D, combo, 1.0, -1.0);
    const double dn = frob_norm(D);
    if (frob_norm(diff) > 1e-12 * (dn > 0.0 ? dn : 1.0))
    {
      throw ValidationError("system: proportional flag set but D != alpha M + beta K");
    }
  }
}

ExpansionPointSet linspace_points(double lo, double hi, std::int64_t count)
{
  if (count < 1 || !(lo <= hi))
  {
    throw ArgumentError("linspace_points: need count >= 1 and lo <= hi");
  }
  ExpansionPointSet s;
  s.points.resize(static_cast<std::size_t>(count));
  if (count == 1)
  {
    s.points[0] = lo;
    return s;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::int64_t i = 0; i < count; ++i)
  {
    s.points[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  }
  return s;
}

SparseMatrix shifted_operator(const SecondOrderSystem &sys, double s)
{
  const SparseMatrix md = sp_add_scaled(sys.M, sys.D, s * s, s);
  return sp_add_scaled(md, sys.K, 1.0, 1.0);
}

} // namespace mor
