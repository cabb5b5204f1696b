// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Bundle files: <stem>.json holds the manifest (dimensions, keys, the stage
// record and the parameter table), <stem>.bin the parameters as
// little-endian f64 in manifest order. Matrices are stored column-major.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adtg/embedding/embedding.hpp"
#include "adtg/guidance/guidance.hpp"

namespace adtg {

/// Which stage wrote a bundle and under which configuration.
struct StageRecord {
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool operator==(const StageRecord&) const = default;
};

template <typename Bundle>
struct Stored {
  Bundle bundle;
  StageRecord record;
};

void save_embedding_bundle(const std::filesystem::path& stem, const EmbeddingBundle& b, const StageRecord& r);
/// IoError when missing, ParseError/DataError when the files disagree.
Stored<EmbeddingBundle> load_embedding_bundle(const std::filesystem::path& stem);

void save_guidance_bundle(const std::filesystem::path& stem, const GuidanceBundle& b, const StageRecord& r);
Stored<GuidanceBundle> load_guidance_bundle(const std::filesystem::path& stem);

/// Only the stage record, without reading the blob.
StageRecord read_stage_record(const std::filesystem::path& stem);
bool bundle_exists(const std::filesystem::path& stem);

/// "epoch,loss" rows, 1-based epochs.
std::string loss_csv(const std::vector<double>& epoch_loss);

}  // namespace adtg
