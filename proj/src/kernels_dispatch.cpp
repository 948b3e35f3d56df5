// SPDX-License-Identifier: Apache-2.0

#include "mor/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace mor::kernels
{

const Ops &scalar_ops();
#if defined(MOR_HAVE_AVX2)
const Ops &avx2_ops();
#endif

namespace
{

bool cpu_has_avx2()
{
#if defined(MOR_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Variant pick_initial()
{
  if (const char *env = std::getenv("MOR_KERNELS"))
  {
    if (std::strcmp(env, "scalar") == 0)
    {
      return Variant::scalar;
    }
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2())
    {
      return Variant::avx2;
    }
    return Variant::scalar;
  }
  return cpu_has_avx2() ? Variant::avx2 : Variant::scalar;
}

Variant &selected()
{
  static Variant v = pick_initial();
  return v;
}

} // namespace

const Ops &table(Variant v)
{
#if defined(MOR_HAVE_AVX2)
  if (v == Variant::avx2)
  {
    return avx2_ops();
  }
#else
  (void)v;
#endif
  return scalar_ops();
}

const Ops &active()
{
  return table(selected());
}

Variant active_variant()
{
  return selected();
}

const char *variant_name(Variant v)
{
  switch (v)
  {
    case Variant::avx2:
      return "avx2";
    case Variant::scalar:
    default:
      return "scalar";
  }
}

bool variant_available(Variant v)
{
  if (v == Variant::scalar)
  {
    return true;
  }
  return cpu_has_avx2();
}

bool force_variant(Variant v)
{
  if (!variant_available(v))
  {
    return false;
  }
  selected() = v;
  return true;
}

} // namespace mor::kernels
