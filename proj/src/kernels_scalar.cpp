// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Plain loops, single accumulator, in-order summation.

#include "mor/kernels.hpp"

namespace mor::kernels
{

namespace
{

double dot_scalar(const double *x, const double *y, std::size_t n)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    acc += x[i] * y[i];
  }
  return acc;
}

void axpy_scalar(std::size_t n, double a, const double *x, double *y)
{
  for (std::size_t i = 0; i < n; ++i)
  {
    y[i] += a * x[i];
  }
}

void scal_scalar(std::size_t n, double a, double *x)
{
  for (std::size_t i = 0; i < n; ++i)
  {
    x[i] *= a;
  }
}

double gather_dot_scalar(const double *vals, const std::int32_t *idx, const double *x, std::size_t len)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < len; ++k)
  {
    acc += vals[k] * x[idx[k]];
  }
  return acc;
}

} // namespace

const Ops &scalar_ops()
{
  static const Ops ops{dot_scalar, axpy_scalar, scal_scalar, gather_dot_scalar};
  return ops;
}

} // namespace mor::kernels
