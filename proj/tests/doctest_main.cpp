// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "adtg/numkit/allocator.hpp"

int main(int argc, char** argv) {
  adtg::numkit::tune_allocator();
  doctest::Context context(argc, argv);
  return context.run();
}
