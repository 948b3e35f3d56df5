// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "mor/airga.hpp"
#include "mor/system.hpp"

namespace mor
{

/// Writes the run trace as CSV tables plus the ledger and basis blocks in
/// Matrix Market form: solve_log.csv, precond_log.csv, outer_log.csv,
/// summary.txt, ledger.csv, ledger_X_<j>.mtx, ledger_eta_<j>.mtx,
/// basis_<j>.mtx. Columns whose name ends in `_seconds` carry wall-clock
/// values; everything else is deterministic for identical runs.
void write_trace(const std::filesystem::path &dir, const RunTrace &trace);

/// Reads back the parts of a trace needed for post-hoc diagnostics: solver
/// kind, selection ledger with its moment/residual blocks, and the basis
/// blocks.
RunTrace read_trace(const std::filesystem::path &dir);

/// Reduced-system directory: Mh/Dh/Kh/Fh/Cph/Cvh.mtx, basis.mtx, manifest.txt.
void write_reduced(const std::filesystem::path &dir, const ReducedSystem &rs);
ReducedSystem read_reduced(const std::filesystem::path &dir);

} // namespace mor
