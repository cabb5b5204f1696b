// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <system_error>
#include <unistd.h>

#include "adtg/corpus/synth.hpp"

namespace testutil {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("adtg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// a0 -> a1 -> ... -> a{n-1}.
inline adtg::SynthTaskSpec chain_spec(int n, int videos, std::uint64_t seed) {
  adtg::SynthTaskSpec s;
  s.n_actions = n;
  s.n_videos = videos;
  s.seed = seed;
  for (int i = 0; i + 1 < n; ++i) s.partial_order.push_back({i, i + 1});
  return s;
}

}  // namespace testutil
