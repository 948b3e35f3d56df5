// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mor/dense.hpp"
#include "mor/sparse.hpp"

namespace mor
{

/// Second order system M x'' + D x' + K x = F u, y = Cp x + Cv x'.
struct SecondOrderSystem
{
  SparseMatrix M;
  SparseMatrix D;
  SparseMatrix K;
  DenseMatrix F;   // n x m
  DenseMatrix Cp;  // q x n
  DenseMatrix Cv;  // q x n
  double alpha = 0.0;
  double beta = 0.0;
  bool proportional = false; // D == alpha M + beta K when constructed that way

  std::int64_t order() const { return K.nrows; }
  std::int64_t inputs() const { return F.ncols; }
  std::int64_t outputs() const { return Cp.nrows; }

  /// Throws ValidationError on inconsistent dimensions; verifies the
  /// proportional-damping identity when the flag is set.
  void validate() const;
};

/// Galerkin-projected system with the basis that produced it.
struct ReducedSystem
{
  DenseMatrix Mh, Dh, Kh; // r x r
  DenseMatrix Fh;         // r x m
  DenseMatrix Cph, Cvh;   // q x r
  DenseMatrix basis;      // n x r assembled orthonormal basis
  std::int64_t r = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct ExpansionPointSet
{
  enum class Origin
  {
    initial,
    quad_eig,
  };
  std::vector<double> points; // finite, distinct, ascending
  Origin origin = Origin::initial;
  bool padded = false; // true when a refresh could not fill all slots

  std::int64_t count() const { return static_cast<std::int64_t>(points.size()); }
};

ExpansionPointSet linspace_points(double lo, double hi, std::int64_t count);

/// s^2 M + s D + K
SparseMatrix shifted_operator(const SecondOrderSystem &sys, double s);

} // namespace mor
