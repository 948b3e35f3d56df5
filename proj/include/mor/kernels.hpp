// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace mor::kernels
{

/// Available implementations of the arithmetic inner loops. `scalar` is the
/// reference; vector variants must agree with it to rounding differences only
/// (see tests/test_kernels.cpp for the equivalence harness).
enum class Variant
{
  scalar,
  avx2,
};

/// Function table for the hot loops shared by the sparse, dense and Krylov
/// layers. All kernels run over contiguous double arrays; each variant uses a
/// fixed accumulation order so a given variant is bitwise reproducible.
struct Ops
{
  // sum_i x[i]*y[i]
  double (*dot)(const double *x, const double *y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(std::size_t n, double a, const double *x, double *y);
  // x[i] *= a
  void (*scal)(std::size_t n, double a, double *x);
  // sum_k vals[k] * x[idx[k]]  (CSR row dot the dense operand)
  double (*gather_dot)(const double *vals, const std::int32_t *idx, const double *x, std::size_t len);
};

/// Table for an explicit variant; `avx2` falls back to scalar when the binary
/// was built without AVX2 support.
const Ops &table(Variant v);

/// Table selected at startup: AVX2 when the CPU supports AVX2+FMA, scalar
/// otherwise. Overridable with MOR_KERNELS=scalar|avx2 in the environment.
const Ops &active();

Variant active_variant();
const char *variant_name(Variant v);

/// True when the variant can run on this CPU/build.
bool variant_available(Variant v);

/// Forces the active table (used by the equivalence tests); returns false and
/// leaves the selection unchanged when the variant is unavailable.
bool force_variant(Variant v);

} // namespace mor::kernels
