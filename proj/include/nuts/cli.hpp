// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_CLI_HPP
#define NUTS_CLI_HPP

#include <string>
#include <vector>

namespace nuts {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args[0]` is the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace nuts

#endif  // NUTS_CLI_HPP
