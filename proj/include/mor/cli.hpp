// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace mor
{

/// Command-line entry point (generate / reduce / evaluate / diagnose /
/// bench). Returns the process exit code: 0 success, 1 failure, 2 usage.
int run_cli(int argc, const char *const *argv);

} // namespace mor
