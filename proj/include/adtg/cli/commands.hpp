// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Command-line front end. Every command reads a RunConfig and works inside
// two directories:
//
//   <corpus>/                      see corpus/formats.hpp; synth also writes
//     manifest.json                generator specs and counts
//     truth/<task>.json, .dot      generator graph over all emitted sequences
//
//   <out>/
//     config.json                  config of the last train command
//     graphs/<task>.json, .dot     graphs from the train split
//     seed_<s>/embeddings.{json,bin}, embeddings_loss.csv
//     seed_<s>/tracker.{json,bin}, tracker_loss.csv
//     seed_<s>/recommender.{json,bin}, recommender_loss.csv
//     eval/<mode>.{json,txt}, eval/ablation.{json,txt}
//     plans/<video>_cut<k>.{txt,jsonl}
//
// Each bundle records the hash of the config it was trained under; a stage
// whose prerequisite is missing or was trained under a different config
// raises ConfigError.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "adtg/eval/evaluate.hpp"
#include "adtg/pipeline/config.hpp"

namespace adtg {

std::filesystem::path seed_dir(const RunConfig& c, std::uint64_t seed);

void cmd_synth(const RunConfig& c, std::ostream& out);
/// Loads and validates the corpus, checks that every task can be split,
/// prints the statistics table.
void cmd_ingest_verify(const RunConfig& c, std::ostream& out);
/// Prints unseen val/test edges per task; they are expected, not errors.
void cmd_build_graphs(const RunConfig& c, std::ostream& out);
/// `stage` is embeddings, tracker, recommender or all. A named stage always
/// retrains; `all` skips stages whose bundle is already up to date.
void cmd_train(const RunConfig& c, const std::string& stage, std::ostream& out);
/// `mode` is an EvalMode name or "all".
std::vector<EvalReport> cmd_eval(const RunConfig& c, const std::string& mode, std::ostream& out);
/// Plans `video_id` with the first seed's bundles from second `prefix_cut`
/// (0-based) on, with the actions finished before it as history.
/// UsageError for an unknown video or an out-of-range cut.
void cmd_plan(const RunConfig& c, const std::string& video_id, int prefix_cut, std::ostream& out);
void cmd_stats(const RunConfig& c, std::ostream& out);
/// Trains and evaluates every variant in memory; side-by-side table.
void cmd_ablation(const RunConfig& c, const std::vector<std::string>& variants, const std::vector<std::string>& modes,
                  std::ostream& out);

/// Parses argv and runs one subcommand. Returns the exit code: 0 on
/// success, 2 for invalid input or configuration, 1 for anything else.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adtg
