// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// On-disk corpus layout:
//
//   <root>/tasks/<task_id>/vocabulary.json   {"task_id", "actions": [...]}
//   <root>/tasks/<task_id>/annotations.jsonl one {"video_id", "segments": [...]} per line
//   <root>/features/<video_id>.feat          ADTGFEAT binary, see write_features
//
// Tasks load in directory-name order; videos in annotation-file order.

#include <filesystem>
#include <string>

#include "adtg/corpus/types.hpp"

namespace adtg {

inline constexpr char kFeatureMagic[8] = {'A', 'D', 'T', 'G', 'F', 'E', 'A', 'T'};
inline constexpr std::uint16_t kFeatureVersion = 1;

/// Whole-file binary read and truncating write; IoError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// "ADTGFEAT", u16 version, u32 T, u32 D, then T*D little-endian f32, row-major.
void write_features(const std::filesystem::path& path, const FeatureStream& features);
FeatureStream read_features(const std::filesystem::path& path);

std::string vocabulary_to_json(const ActionVocabulary& vocab);
ActionVocabulary vocabulary_from_json(const std::string& text);

/// One annotation line (no trailing newline).
std::string annotation_to_json(const VideoRecord& video, const ActionVocabulary& vocab);

void save_corpus(const Corpus& corpus, const std::filesystem::path& root);
Corpus load_corpus(const std::filesystem::path& root);

}  // namespace adtg
