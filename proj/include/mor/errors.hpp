// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mor
{

/// Precondition violation on a caller-supplied argument (shape mismatch etc.).
class ArgumentError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A direct factorization met a pivot too small to proceed.
class SingularMatrixError : public std::runtime_error
{
public:
  SingularMatrixError(const std::string &msg, std::int64_t pivot_index)
    : std::runtime_error(msg), pivot(pivot_index)
  {
  }
  std::int64_t pivot;
};

/// An iteration hit its sweep budget without reaching its tolerance.
class ConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Krylov recurrence produced a non-usable search direction.
class BreakdownError : public std::runtime_error
{
public:
  BreakdownError(const std::string &msg, std::int64_t iter) : std::runtime_error(msg), iteration(iter) {}
  std::int64_t iteration;
};

/// A per-column minimal-residual loop stopped making progress.
class StagnationError : public std::runtime_error
{
public:
  StagnationError(const std::string &msg, std::int64_t col) : std::runtime_error(msg), column(col) {}
  std::int64_t column;
};

/// NaN/Inf appeared where a finite value is required.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// An operation required a Hurwitz matrix and got eigenvalues in the closed right half plane.
class StabilityError : public std::runtime_error
{
public:
  StabilityError(const std::string &msg, std::vector<std::pair<double, double>> offending_eigs = {})
    : std::runtime_error(msg), eigenvalues(std::move(offending_eigs))
  {
  }
  std::vector<std::pair<double, double>> eigenvalues;
};

/// Rank-deficient input where full column rank is a precondition.
class RankError : public std::runtime_error
{
public:
  RankError(const std::string &msg, std::vector<std::int64_t> cols = {})
    : std::runtime_error(msg), deficient_columns(std::move(cols))
  {
  }
  std::vector<std::int64_t> deficient_columns;
};

/// Malformed file contents.
class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string &msg, std::int64_t line_number) : std::runtime_error(msg), line(line_number) {}
  std::int64_t line;
};

/// Missing file or unreadable path.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input whose pieces disagree (dimension checks across files).
class ValidationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace mor
