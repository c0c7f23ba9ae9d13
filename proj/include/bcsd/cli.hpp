// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bcsd {

/// Exit statuses of the command-line tool.
enum ExitStatus : int
{
    kExitOk = 0,
    kExitFailure = 1,  ///< numerical or solver failure
    kExitUsage = 2     ///< bad arguments or configuration
};

/*!
 * Entry point behind the `bcsd` executable:
 * `forward|optimize|report|verify --config <path> [--out <dir>] [--threads N]`.
 * `args` excludes the program name.
 */
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bcsd
