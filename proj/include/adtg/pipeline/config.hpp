// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration shared by every command. Serialized as one flat JSON
// object; any key can be overridden from the command line as --key=value.

#include <cstdint>
#include <string>
#include <vector>

#include "adtg/corpus/synth.hpp"
#include "adtg/embedding/embedding.hpp"
#include "adtg/guidance/guidance.hpp"

namespace adtg {

enum class Variant : std::uint8_t { full, no_history, random_embed, onehot_embed };
const char* to_string(Variant v);
/// UsageError for an unknown name.
Variant variant_from_string(const std::string& s);

struct RunConfig {
  std::string corpus = "corpus";
  std::string out = "run";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Train/val/test assignment; independent of the training seeds.
  std::uint64_t split_seed = 0;

  int feature_dim = 3200;
  int condition_dim = 128;
  int embedding_dim = 96;
  /// Hidden width of f, g, the history RNN and both scorers.
  int hidden_dim = 128;
  double margin = 0.5;
  double embedding_lr = 1e-5;
  double guidance_lr = 5e-5;
  int embedding_epochs = 50;
  int tracker_epochs = 50;
  int recommender_epochs = 100;
  int beam_width = 5;
  int max_plan_len = 20;

  Variant variant = Variant::full;
  HistoryMode history_mode = HistoryMode::per_event;
  bool joint_rnn = true;
  bool cross_task_negatives = false;

  /// "train", "val" or "test".
  std::string eval_split = "test";
  std::uint64_t cut_seed = 0;
  int complete_start = 0;

  /// Synthetic corpus for the synth command: explicit task specs win over
  /// the named preset. Specs read from JSON default to `feature_dim`.
  std::string synth_preset = "chain";
  std::uint64_t synth_seed = 0;
  /// Videos per preset task; 0 keeps the preset's own count.
  int synth_videos = 0;
  std::vector<SynthTaskSpec> synth_tasks;

  /// ConfigError naming the first invalid field.
  void validate() const;
  bool operator==(const RunConfig&) const;
};

/// Two-space indented JSON with every field, newline-terminated.
std::string config_to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys and bad values raise
/// ConfigError. The result is validated.
RunConfig config_from_json(const std::string& text);

/// Applies "key=value" (a leading "--" is accepted). The value is read as
/// JSON when it parses and as a string otherwise; list fields also take a
/// comma-separated form. ConfigError for unknown keys or bad values.
void apply_override(RunConfig& c, const std::string& assignment);

/// Synth spec <-> JSON. Cluster centres are always drawn from the seed.
std::string synth_spec_to_json(const SynthTaskSpec& s);
SynthTaskSpec synth_spec_from_json(const std::string& text, int default_feature_dim = 16);

EmbeddingConfig embedding_config(const RunConfig& c);
GuidanceConfig guidance_config(const RunConfig& c);
PlanOptions plan_options(const RunConfig& c);

}  // namespace adtg
