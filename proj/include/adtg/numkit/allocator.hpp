// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace adtg::numkit {

/// Keeps freed matrix buffers on the heap instead of returning them to the
/// kernel after every training step. No-op outside glibc. Call once, early.
void tune_allocator();

}  // namespace adtg::numkit
