// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "adtg/cli/commands.hpp"
#include "adtg/numkit/allocator.hpp"

int main(int argc, char** argv) {
  adtg::numkit::tune_allocator();
  return adtg::run_cli(argc, argv, std::cout, std::cerr);
}
