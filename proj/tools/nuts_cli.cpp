// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/cli.hpp"

int main(int argc, char** argv) { return nuts::cli_main(std::vector<std::string>(argv, argv + argc)); }
