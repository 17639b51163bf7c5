// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cfgctrl/commands.hpp"

int main(int argc, char** argv) { return cfgctrl::run_cli(argc, argv, std::cout, std::cerr); }
