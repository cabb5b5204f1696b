// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adtg/corpus/types.hpp"
#include "adtg/graph/adtg_graph.hpp"
#include "adtg/guidance/guidance.hpp"
#include "adtg/numkit/types.hpp"

namespace adtg {

enum class EvalMode : std::uint8_t { tracking, recommendation, plan_complete, plan_prefix };
const char* to_string(EvalMode m);
/// UsageError for an unknown name.
EvalMode eval_mode_from_string(const std::string& s);

/// The three downstream tasks for one task's videos. Implementations receive
/// the whole video record; only the oracle stub looks at its annotations.
class GuidanceModel {
 public:
  virtual ~GuidanceModel() = default;

  /// Per-second labels with free-running history.
  virtual TrackedVideo track(const VideoRecord& video) const = 0;
  /// Scores for the action following `history` (non-empty, last entry is the
  /// current action). nullopt when the context cannot be scored at all, e.g.
  /// the current action never occurred in training.
  virtual std::optional<StepScores> next(const VideoRecord& video, std::span<const ActionId> history) const = 0;
  /// Plan starting from second `t` (0-based) with `prefix` as history.
  virtual std::vector<ActionId> plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const = 0;
};

/// Trained bundles plus the task graph.
class AdtgModel final : public GuidanceModel {
 public:
  AdtgModel(TaskModel model, Graph graph, PlanOptions options);

  TrackedVideo track(const VideoRecord& video) const override;
  std::optional<StepScores> next(const VideoRecord& video, std::span<const ActionId> history) const override;
  std::vector<ActionId> plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const override;

  const TaskModel& model() const { return model_; }
  const Graph& graph() const { return graph_; }

 private:
  TaskModel model_;
  Graph graph_;
  PlanOptions options_;
};

/// Answers from the video's own annotations.
class OracleModel final : public GuidanceModel {
 public:
  explicit OracleModel(ActionVocabulary vocab);

  TrackedVideo track(const VideoRecord& video) const override;
  std::optional<StepScores> next(const VideoRecord& video, std::span<const ActionId> history) const override;
  std::vector<ActionId> plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const override;

 private:
  ActionVocabulary vocab_;
};

/// Uniform guesses: NULL or any action per second; any action or EOS as the
/// next step; a plan of uniformly drawn actions with the ground truth's length.
/// Draws are seeded per video, so repeated calls agree.
class UniformModel final : public GuidanceModel {
 public:
  UniformModel(ActionVocabulary vocab, std::uint64_t seed);

  TrackedVideo track(const VideoRecord& video) const override;
  std::optional<StepScores> next(const VideoRecord& video, std::span<const ActionId> history) const override;
  std::vector<ActionId> plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const override;

 private:
  ActionVocabulary vocab_;
  std::uint64_t seed_;
};

/// Models for one training seed, keyed by task id.
using ModelSet = std::map<std::string, std::shared_ptr<const GuidanceModel>>;

struct EvalOptions {
  /// Seeds the per-video cut points of plan_prefix; shared by all training
  /// seeds so that runs compare on the same cuts.
  std::uint64_t cut_seed = 0;
  /// Second (0-based) whose features localize a complete plan.
  int complete_start = 0;
  /// Column label in the text table.
  std::string label = "ADTG";
  std::string config_hash;
};

/// Where a plan_prefix evaluation cuts a video.
struct PrefixCut {
  int second = 0;                    // 0-based
  std::vector<ActionId> prefix;      // actions finished before `second`
  std::vector<ActionId> remainder;   // the rest of the compressed sequence
};

/// Prefix = compressed actions whose last second lies before `second`.
PrefixCut cut_at(const VideoRecord& video, const ActionVocabulary& vocab, int second);

/// Uniform over the seconds up to the last annotated one, so that the
/// remainder is never empty. nullopt for videos without actions.
std::optional<PrefixCut> sample_cut(const VideoRecord& video, const ActionVocabulary& vocab, numkit::Rng& rng);

struct MetricSummary {
  double mean = 0;
  /// Sample standard deviation; present with two or more values.
  std::optional<double> std;
  std::size_t count = 0;
};

struct EvalReport {
  EvalMode mode = EvalMode::tracking;
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  /// Column order of the metrics.
  std::vector<std::string> metrics;
  std::vector<std::string> tasks;
  /// per_seed[i][task][metric]; metrics undefined for a task are absent.
  std::vector<std::map<std::string, std::map<std::string, double>>> per_seed;
  std::map<std::string, std::map<std::string, MetricSummary>> per_task;
  /// Over seeds of the unweighted mean over tasks.
  std::map<std::string, MetricSummary> aggregate;
};

/// models[i] was trained with seeds[i]. ConfigError when a seed has no model
/// set or a task of `split` has no model.
EvalReport evaluate(const Corpus& split, std::span<const ModelSet> models, std::span<const std::uint64_t> seeds,
                    EvalMode mode, const EvalOptions& options = {});

/// Metric names reported by `mode`, in column order.
std::vector<std::string> metric_names(EvalMode mode);

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);

/// Metric rows by one column, "0.741 (± 0.013)" cells, then a per-task block.
std::string format_report(const EvalReport& r);

/// Side-by-side columns, one per variant; each column holds that variant's
/// reports for any set of modes. Rows are (mode, metric) pairs.
std::string format_columns(std::span<const std::vector<EvalReport>> columns);

}  // namespace adtg
