// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Task tracking, next-action recommendation and plan generation. All three
// share one history RNN that consumes the embeddings of past actions.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adtg/corpus/types.hpp"
#include "adtg/embedding/embedding.hpp"
#include "adtg/graph/adtg_graph.hpp"
#include "adtg/numkit/autodiff.hpp"
#include "adtg/numkit/types.hpp"

namespace adtg {

/// When the tracker's history advances: once per action-change event, or at
/// every non-NULL second.
enum class HistoryMode : std::uint8_t { per_event, per_second };
const char* to_string(HistoryMode m);
HistoryMode history_mode_from_string(const std::string& s);

struct GuidanceConfig {
  int rnn_hidden = 128;
  /// Hidden width of both scorers.
  int scorer_hidden = 128;
  double learning_rate = 5e-5;
  int tracker_epochs = 50;
  int recommender_epochs = 100;
  /// Recommender training also updates the history RNN.
  bool joint_rnn = true;
  /// false: scorers see a zero history vector and the RNN is never trained.
  bool use_history = true;
  HistoryMode history_mode = HistoryMode::per_event;
};

struct GuidanceBundle {
  numkit::Rnn history_rnn;     // embedding -> rnn_hidden
  numkit::Mlp2 track_scorer;   // (x: D, h, e) -> 1
  numkit::Mlp2 rec_scorer;     // (e_last, h, e) -> 1
  /// Learned here; the embedding bundle holds real actions only.
  numkit::VectorXd null_embedding;
  numkit::VectorXd eos_embedding;
  bool use_history = true;
  HistoryMode history_mode = HistoryMode::per_event;
  /// fingerprint() of the embedding bundle this was trained against.
  std::uint64_t embedding_fingerprint = 0;

  int feature_dim() const;
  int embedding_dim() const { return static_cast<int>(history_rnn.input_dim()); }
  int hidden_dim() const { return static_cast<int>(history_rnn.hidden_dim()); }
  void validate() const;
  bool operator==(const GuidanceBundle& o) const;
};

GuidanceBundle init_guidance(const EmbeddingBundle& embeddings, const GuidanceConfig& config, numkit::Rng& rng);

/// A guidance bundle bound to one task's embeddings. Row i of `table` is the
/// embedding of ActionId i (0 = NULL, size()+1 = EOS).
struct TaskModel {
  std::shared_ptr<const GuidanceBundle> bundle;
  ActionVocabulary vocab;
  numkit::MatrixXd table;
};

/// ConfigError when `guidance` was not trained against `embeddings`.
TaskModel bind_task(std::shared_ptr<const GuidanceBundle> guidance, const EmbeddingBundle& embeddings,
                    const ActionVocabulary& vocab);

struct TrackState {
  numkit::VectorXd h;
  ActionId last_action = kNullAction;
  std::vector<ActionId> history_events;
};

TrackState initial_state(const TaskModel& m);

struct StepScores {
  ActionId action;
  std::vector<ActionId> candidates;
  /// Log-softmax over `candidates`, same order.
  numkit::VectorXd log_probs;
};

/// Scores candidates for observation x; argmax with ties to the lower action index.
StepScores track_step(const TaskModel& m, const TrackState& state, const numkit::VectorXd& x,
                      std::span<const ActionId> candidates);

/// UsageError for NULL or EOS.
TrackState advance_history(const TaskModel& m, TrackState state, ActionId a);

/// Candidates are the graph successors of state.last_action (EOS included).
StepScores recommend(const TaskModel& m, const Graph& g, const TrackState& state);

/// Per-second tracking of a whole video with free-running history.
struct TrackedVideo {
  std::vector<ActionId> labels;
  std::vector<StepScores> steps;
};
TrackedVideo track_video(const TaskModel& m, const FeatureStream& features);

// ---------------------------------------------------------------------------
// Planning

struct PlanTraceStep {
  std::string kind;  // "track" or "recommend"
  int round = 0;
  std::vector<ActionId> context;
  StepScores scores;
};

struct Plan {
  /// Starts with the localized action; EOS is not included.
  std::vector<ActionId> actions;
  double log_prob = 0;
  /// Ended by EOS rather than by max_len.
  bool finished = false;
  std::vector<PlanTraceStep> trace;
};

struct PlanOptions {
  int beam_width = 5;
  int max_len = 20;
};

/// One tracking step on x_init after replaying `prefix` into the history,
/// then beam search over recommendation steps.
Plan plan(const TaskModel& m, const Graph& g, const numkit::VectorXd& x_init, std::span<const ActionId> prefix,
          const PlanOptions& options);

/// Argmax rollout: the reference for beam width 1.
Plan greedy_plan(const TaskModel& m, const Graph& g, const numkit::VectorXd& x_init,
                 std::span<const ActionId> prefix, int max_len);

/// JSON-lines dump of a plan trace, one step per line.
std::string trace_to_jsonl(const Plan& p, const ActionVocabulary& vocab);

// ---------------------------------------------------------------------------
// Training

struct GuidanceTrainLog {
  std::vector<double> tracker_loss;
  std::vector<double> recommender_loss;
};

// Tape forms of the two losses. `table` has one row per ActionId of the task
// (NULL, actions, EOS); `rnn` is null when the history is disabled, in which
// case the scorers see a zero vector of `hidden_dim` rows.

/// Mean cross-entropy of the seconds in `x` (one column each) against
/// `labels`, over {NULL} and the task's actions, after history `events`.
numkit::Var track_loss(const numkit::RnnVars<double>* rnn, const numkit::Mlp2Vars<double>& scorer,
                       const numkit::Var& table, std::span<const ActionId> events, const numkit::MatrixXd& x,
                       std::span<const ActionId> labels, Eigen::Index hidden_dim);

/// Cross-entropy of `next` among `candidates` after `history`, whose last
/// element is the current action.
numkit::Var recommend_loss(const numkit::RnnVars<double>* rnn, const numkit::Mlp2Vars<double>& scorer,
                           const numkit::Var& table, std::span<const ActionId> history,
                           std::span<const ActionId> candidates, ActionId next, Eigen::Index hidden_dim);

/// Teacher-forced per-second cross-entropy over {NULL} and the task
/// vocabulary, one Adam step per run of seconds sharing a history state.
void train_tracker(GuidanceBundle& bundle, const Corpus& train, const EmbeddingBundle& embeddings,
                   const GuidanceConfig& config, std::uint64_t seed, GuidanceTrainLog* log = nullptr);

/// Teacher-forced cross-entropy over graph successors for every consecutive
/// pair (and final -> EOS) of every compressed training sequence.
void train_recommender(GuidanceBundle& bundle, const Corpus& train, std::span<const Graph> graphs,
                       const EmbeddingBundle& embeddings, const GuidanceConfig& config, std::uint64_t seed,
                       GuidanceTrainLog* log = nullptr);

}  // namespace adtg
