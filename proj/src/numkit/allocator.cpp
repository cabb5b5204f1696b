// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/numkit/allocator.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace adtg::numkit {

void tune_allocator() {
#if defined(__GLIBC__)
  // Buffers between 128 KiB and 4 MiB were mmap'd and unmapped per step.
  mallopt(M_MMAP_THRESHOLD, 4 << 20);
  mallopt(M_TRIM_THRESHOLD, 64 << 20);
  mallopt(M_TOP_PAD, 16 << 20);
#endif
}

}  // namespace adtg::numkit
