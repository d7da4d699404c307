// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "revode/cli.hpp"

int main(int argc, char** argv) { return revode::run_cli(argc, argv, std::cout, std::cerr); }
