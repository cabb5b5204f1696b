// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Corpus -> graphs -> embeddings -> tracker -> recommender, and the ablation
// harness on top of it.
//
// Seeding: every randomness consumer draws from derive_seed(root, k) with a
// fixed counter k per stage (see TrainStage), so a run is reproducible from
// its root seed alone and stages can be re-run independently.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adtg/corpus/synth.hpp"
#include "adtg/eval/evaluate.hpp"
#include "adtg/graph/adtg_graph.hpp"
#include "adtg/pipeline/config.hpp"

namespace adtg {

enum class TrainStage : std::uint8_t { embeddings = 1, guidance_init = 2, tracker = 3, recommender = 4 };
const char* to_string(TrainStage s);
/// Accepts embeddings, tracker and recommender; UsageError otherwise.
TrainStage train_stage_from_string(const std::string& s);

std::uint64_t stage_seed(std::uint64_t root, TrainStage stage);

/// Report column label: "ADTG" for the full pipeline, "ADTG <variant>" otherwise.
std::string variant_label(Variant v);

struct CorpusSplits {
  Corpus train, val, test;
  /// UsageError for a name other than train, val or test.
  const Corpus& named(const std::string& name) const;
};

/// Per-task split_dataset; every split keeps every task, in corpus order.
CorpusSplits split_corpus(const Corpus& corpus, std::uint64_t split_seed);

/// Hash of task ids, vocabularies, video ids, durations and segments.
/// Feature values are left out so that large corpora hash quickly.
std::uint64_t corpus_fingerprint(const Corpus& c);

/// 16 hex digits over everything that determines the stage's bundle: the
/// corpus, the relevant config fields, the root seed and, for later stages,
/// the hash of the stage before. guidance_init is folded into tracker.
std::string stage_hash(const RunConfig& c, std::uint64_t corpus_fp, std::uint64_t seed, TrainStage stage);

/// Hash of every config field that affects evaluation output, excluding
/// paths, seeds and synth settings.
std::string config_hash(const RunConfig& c, std::uint64_t corpus_fp);

/// One graph per task from the compressed training sequences.
std::vector<Graph> build_graphs(const Corpus& train);

/// full / no_history train; random_embed returns the seeded initialization;
/// onehot_embed returns frozen identity rows.
EmbeddingBundle embedding_stage(const Corpus& train, const RunConfig& c, std::uint64_t seed,
                                EmbeddingTrainLog* log = nullptr);
/// Initializes a guidance bundle and trains the tracker.
GuidanceBundle tracker_stage(const Corpus& train, const EmbeddingBundle& embeddings, const RunConfig& c,
                             std::uint64_t seed, GuidanceTrainLog* log = nullptr);
void recommender_stage(GuidanceBundle& guidance, const Corpus& train, std::span<const Graph> graphs,
                       const EmbeddingBundle& embeddings, const RunConfig& c, std::uint64_t seed,
                       GuidanceTrainLog* log = nullptr);

struct TrainedRun {
  std::uint64_t seed = 0;
  EmbeddingBundle embeddings;
  std::shared_ptr<const GuidanceBundle> guidance;
  std::vector<Graph> graphs;
  EmbeddingTrainLog embedding_log;
  GuidanceTrainLog guidance_log;
};

TrainedRun train_all(const Corpus& train, const RunConfig& c, std::uint64_t seed);

/// One AdtgModel per graph. ConfigError when the bundles do not fit.
ModelSet model_set(const EmbeddingBundle& embeddings, std::shared_ptr<const GuidanceBundle> guidance,
                   std::span<const Graph> graphs, const RunConfig& c);
ModelSet model_set(const TrainedRun& run, const RunConfig& c);

/// Trains `variant` once per seed on the train split of `corpus` and
/// evaluates it on `c.eval_split` in each of `modes`. Reports are labelled
/// with variant_label.
std::vector<EvalReport> run_ablation(Variant variant, const Corpus& corpus, std::span<const std::uint64_t> seeds,
                                     const RunConfig& c, std::span<const EvalMode> modes);

// ---------------------------------------------------------------------------
// Synthetic corpora

/// Named task suites:
///   chain       one 5-action chain
///   dag8        one 8-action DAG with two fork/join diamonds
///   separable6  one 6-action DAG
///   ambiguous   a task whose first and fourth actions look identical
///   suite       four tasks of mixed shape, some with optional actions
///   primary18   18 chain-like tasks sized like a real instructional corpus
/// Task seeds are derive_seed(seed, task index). `videos` > 0 overrides the
/// per-task video count. UsageError for an unknown name.
std::vector<SynthTaskSpec> synth_preset(const std::string& name, int feature_dim, std::uint64_t seed,
                                        int videos = 0);
std::vector<std::string> synth_preset_names();

/// The tasks the synth command writes: c.synth_tasks, or else the preset.
std::vector<SynthTask> synth_tasks(const RunConfig& c);

Corpus corpus_of(const std::vector<SynthTask>& tasks);

}  // namespace adtg
