// SPDX-License-Identifier: Apache-2.0

#include "mor/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mor/errors.hpp"

namespace mor
{

SecondOrderSystem beam_generate(const ModelSpec &spec)
{
  if (spec.n < 2)
  {
    throw ArgumentError("beam_generate: n must be at least 2");
  }
  if (spec.stiffness_scale <= 0.0 || spec.mass_scale <= 0.0)
  {
    throw ArgumentError("beam_generate: scales must be positive");
  }
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0 && spec.beta > 0.0 && spec.beta < 1.0))
  {
    throw ArgumentError("beam_generate: alpha and beta must lie in (0, 1)");
  }
  const std::int64_t n = spec.n;

  std::vector<SparseMatrix::Triplet> kt;
  kt.reserve(static_cast<std::size_t>(3 * n));
  for (std::int64_t i = 0; i < n; ++i)
  {
    if (i > 0)
    {
      kt.push_back({i, i - 1, -spec.stiffness_scale});
    }
    kt.push_back({i, i, 2.0 * spec.stiffness_scale});
    if (i + 1 < n)
    {
      kt.push_back({i, i + 1, -spec.stiffness_scale});
    }
  }

  std::vector<SparseMatrix::Triplet> mt;
  if (spec.mass == ModelSpec::Mass::identity)
  {
    for (std::int64_t i = 0; i < n; ++i)
    {
      mt.push_back({i, i, spec.mass_scale});
    }
  }
  else
  {
    for (std::int64_t i = 0; i < n; ++i)
    {
      if (i > 0)
      {
        mt.push_back({i, i - 1, spec.mass_scale / 6.0});
      }
      mt.push_back({i, i, spec.mass_scale * 2.0 / 3.0});
      if (i + 1 < n)
      {
        mt.push_back({i, i + 1, spec.mass_scale / 6.0});
      }
    }
  }

  SecondOrderSystem sys;
  sys.K = SparseMatrix::from_triplets(n, n, std::move(kt));
  sys.M = SparseMatrix::from_triplets(n, n, std::move(mt));
  sys.D = sp_add_scaled(sys.M, sys.K, spec.alpha, spec.beta);
  sys.alpha = spec.alpha;
  sys.beta = spec.beta;
  sys.proportional = true;

  sys.F = DenseMatrix(n, 1);
  sys.F.at(0, 0) = 1.0;
  sys.Cp = DenseMatrix(1, n);
  sys.Cp.at(0, spec.io == ModelSpec::Io::collocated ? 0 : n - 1) = 1.0;
  sys.Cv = DenseMatrix(1, n);
  return sys;
}

namespace
{

std::string fmt17(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct MmHeader
{
  bool symmetric = false;
};

// Reads past comments; returns the dimensions line.
std::string next_data_line(std::istream &in, std::int64_t &lineno)
{
  std::string line;
  while (std::getline(in, line))
  {
    ++lineno;
    std::size_t p = 0;
    while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p])))
    {
      ++p;
    }
    if (p == line.size() || line[p] == '%')
    {
      continue;
    }
    return line;
  }
  return {};
}

MmHeader parse_header(std::istream &in, const std::filesystem::path &path, std::int64_t &lineno)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw ParseError(path.string() + ": empty file", 1);
  }
  ++lineno;
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" || field != "real")
  {
    throw ParseError(path.string() + ": expected '%%MatrixMarket matrix coordinate real ...' header", 1);
  }
  MmHeader h;
  if (symmetry == "symmetric")
  {
    h.symmetric = true;
  }
  else if (symmetry != "general")
  {
    throw ParseError(path.string() + ": unsupported symmetry '" + symmetry + "'", 1);
  }
  return h;
}

} // namespace

SparseMatrix read_mm(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("read_mm: cannot open " + path.string());
  }
  std::int64_t lineno = 0;
  const MmHeader h = parse_header(in, path, lineno);
  const std::string dims = next_data_line(in, lineno);
  if (dims.empty())
  {
    throw ParseError(path.string() + ": missing size line", lineno);
  }
  std::int64_t nrows = 0, ncols = 0, nnz = 0;
  {
    std::istringstream ds(dims);
    if (!(ds >> nrows >> ncols >> nnz) || nrows < 0 || ncols < 0 || nnz < 0)
    {
      throw ParseError(path.string() + ": malformed size line", lineno);
    }
  }
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(static_cast<std::size_t>(h.symmetric ? 2 * nnz : nnz));
  for (std::int64_t k = 0; k < nnz; ++k)
  {
    const std::string line = next_data_line(in, lineno);
    if (line.empty())
    {
      throw ParseError(path.string() + ": unexpected end of file, expected " + std::to_string(nnz) + " entries",
                       lineno);
    }
    std::istringstream es(line);
    std::int64_t i = 0, j = 0;
    double v = 0.0;
    if (!(es >> i >> j >> v))
    {
      throw ParseError(path.string() + ": malformed entry", lineno);
    }
    if (i < 1 || i > nrows || j < 1 || j > ncols)
    {
      throw ParseError(path.string() + ": entry index out of range", lineno);
    }
    t.push_back({i - 1, j - 1, v});
    if (h.symmetric && i != j)
    {
      t.push_back({j - 1, i - 1, v});
    }
  }
  return SparseMatrix::from_triplets(nrows, ncols, std::move(t));
}

void write_mm(const std::filesystem::path &path, const SparseMatrix &A)
{
  std::ofstream out(path);
  if (!out)
  {
    throw IoError("write_mm: cannot open " + path.string() + " for writing");
  }
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.nrows << " " << A.ncols << " " << A.nnz() << "\n";
  for (std::int64_t i = 0; i < A.nrows; ++i)
  {
    for (std::int64_t k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      out << (i + 1) << " " << (A.col_idx[static_cast<std::size_t>(k)] + 1) << " "
          << fmt17(A.values[static_cast<std::size_t>(k)]) << "\n";
    }
  }
  if (!out)
  {
    throw IoError("write_mm: write failed for " + path.string());
  }
}

DenseMatrix read_mm_dense(const std::filesystem::path &path)
{
  const SparseMatrix S = read_mm(path);
  DenseMatrix A(S.nrows, S.ncols);
  for (std::int64_t i = 0; i < S.nrows; ++i)
  {
    for (std::int64_t k = S.row_ptr[static_cast<std::size_t>(i)]; k < S.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    {
      A.at(i, S.col_idx[static_cast<std::size_t>(k)]) = S.values[static_cast<std::size_t>(k)];
    }
  }
  return A;
}

void write_mm_dense(const std::filesystem::path &path, const DenseMatrix &A)
{
  std::vector<SparseMatrix::Triplet> t;
  for (std::int64_t j = 0; j < A.ncols; ++j)
  {
    for (std::int64_t i = 0; i < A.nrows; ++i)
    {
      if (A.at(i, j) != 0.0)
      {
        t.push_back({i, j, A.at(i, j)});
      }
    }
  }
  write_mm(path, SparseMatrix::from_triplets(A.nrows, A.ncols, std::move(t)));
}

void write_system(const std::filesystem::path &dir, const SecondOrderSystem &sys)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_mm(dir / "M.mtx", sys.M);
  write_mm(dir / "K.mtx", sys.K);
  write_mm_dense(dir / "F.mtx", sys.F);
  write_mm_dense(dir / "Cp.mtx", sys.Cp);
  bool cv_nonzero = false;
  for (double v : sys.Cv.values)
  {
    cv_nonzero |= (v != 0.0);
  }
  if (cv_nonzero)
  {
    write_mm_dense(dir / "Cv.mtx", sys.Cv);
  }
  if (!sys.proportional)
  {
    write_mm(dir / "D.mtx", sys.D);
  }

  std::ofstream man(dir / "manifest.txt");
  if (!man)
  {
    throw IoError("write_system: cannot write manifest in " + dir.string());
  }
  man << "n=" << sys.order() << "\n";
  man << "m=" << sys.inputs() << "\n";
  man << "q=" << sys.outputs() << "\n";
  man << "alpha=" << fmt17(sys.alpha) << "\n";
  man << "beta=" << fmt17(sys.beta) << "\n";
  man << "proportional=" << (sys.proportional ? "true" : "false") << "\n";
}

SecondOrderSystem read_system(const std::filesystem::path &dir)
{
  const auto need = [&](const char *name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p))
    {
      throw IoError("read_system: missing required file " + p.string());
    }
    return p;
  };

  std::map<std::string, std::string> kv;
  {
    std::ifstream man(need("manifest.txt"));
    std::string line;
    while (std::getline(man, line))
    {
      const auto eq = line.find('=');
      if (eq == std::string::npos)
      {
        continue;
      }
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }

  SecondOrderSystem sys;
  sys.M = read_mm(need("M.mtx"));
  sys.K = read_mm(need("K.mtx"));
  sys.F = read_mm_dense(need("F.mtx"));
  sys.Cp = read_mm_dense(need("Cp.mtx"));
  if (std::filesystem::exists(dir / "Cv.mtx"))
  {
    sys.Cv = read_mm_dense(dir / "Cv.mtx");
  }
  else
  {
    sys.Cv = DenseMatrix(sys.Cp.nrows, sys.Cp.ncols);
  }
  sys.alpha = kv.count("alpha") ? std::stod(kv["alpha"]) : 0.0;
  sys.beta = kv.count("beta") ? std::stod(kv["beta"]) : 0.0;
  sys.proportional = kv.count("proportional") && kv["proportional"] == "true";
  if (std::filesystem::exists(dir / "D.mtx"))
  {
    sys.D = read_mm(dir / "D.mtx");
  }
  else
  {
    if (!kv.count("alpha") || !kv.count("beta"))
    {
      throw IoError("read_system: no D.mtx and no alpha/beta in manifest at " + dir.string());
    }
    sys.D = sp_add_scaled(sys.M, sys.K, sys.alpha, sys.beta);
    sys.proportional = true;
  }
  sys.validate();
  return sys;
}

} // namespace mor
