// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mor/system.hpp"

namespace mor
{

/// Benchmark model family: a 1-D chain with SPD tridiagonal stiffness,
/// identity or consistent tridiagonal mass, and proportional damping
/// D = alpha M + beta K. This is a stand-in with the same structure as the
/// beam benchmarks in the model-reduction literature; the exact physical
/// matrices of those benchmarks are not reproduced here.
struct ModelSpec
{
  enum class Mass
  {
    identity,   // M = mass_scale * I
    consistent, // M = mass_scale * tridiag(1/6, 2/3, 1/6)
  };
  enum class Io
  {
    collocated, // F = e_1, Cp = e_1^T: driving-point response (default)
    end_to_end, // F = e_1, Cp = e_n^T
  };

  std::int64_t n = 0;
  double alpha = 0.05;
  double beta = 0.05;
  double stiffness_scale = 0.01;
  double mass_scale = 1.0;
  Mass mass = Mass::identity;
  Io io = Io::collocated;
  // Cv stays zero for this family.
};

SecondOrderSystem beam_generate(const ModelSpec &spec);

/// Matrix Market coordinate format, real, general or symmetric. Writes 17
/// significant digits so write-then-read reproduces values exactly; symmetric
/// input storage is expanded on read.
SparseMatrix read_mm(const std::filesystem::path &path);
void write_mm(const std::filesystem::path &path, const SparseMatrix &A);

DenseMatrix read_mm_dense(const std::filesystem::path &path);
void write_mm_dense(const std::filesystem::path &path, const DenseMatrix &A);

/// System directory layout: M.mtx, K.mtx, F.mtx, Cp.mtx, optional Cv.mtx,
/// optional D.mtx, and manifest.txt (flat key=value). When D.mtx is absent the
/// damping is rebuilt from the manifest's alpha and beta.
void write_system(const std::filesystem::path &dir, const SecondOrderSystem &sys);
SecondOrderSystem read_system(const std::filesystem::path &dir);

} // namespace mor
