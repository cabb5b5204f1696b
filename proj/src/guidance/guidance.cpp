// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/guidance/guidance.hpp"

#include "adtg/error.hpp"
#include "adtg/numkit/ops.hpp"

namespace adtg {

using numkit::MatrixXd;
using numkit::VectorXd;

const char* to_string(HistoryMode m) { return m == HistoryMode::per_event ? "per_event" : "per_second"; }

HistoryMode history_mode_from_string(const std::string& s) {
  if (s == "per_event") return HistoryMode::per_event;
  if (s == "per_second") return HistoryMode::per_second;
  throw ConfigError("unknown history mode '" + s + "' (expected per_event or per_second)");
}

int GuidanceBundle::feature_dim() const {
  return static_cast<int>(track_scorer.input_dim()) - hidden_dim() - embedding_dim();
}

void GuidanceBundle::validate() const {
  history_rnn.validate();
  track_scorer.validate();
  rec_scorer.validate();
  const auto e = embedding_dim(), h = hidden_dim();
  if (feature_dim() < 1 || track_scorer.output_dim() != 1) throw ShapeError("tracking scorer has the wrong shape");
  if (rec_scorer.input_dim() != 2 * e + h || rec_scorer.output_dim() != 1) {
    throw ShapeError("recommendation scorer has the wrong shape");
  }
  if (null_embedding.size() != e || eos_embedding.size() != e) throw ShapeError("NULL/EOS embeddings have the wrong size");
}

bool GuidanceBundle::operator==(const GuidanceBundle& o) const {
  auto same = [](const numkit::Mlp2& a, const numkit::Mlp2& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 && a.activation == b.activation;
  };
  return history_rnn.w_in == o.history_rnn.w_in && history_rnn.w_h == o.history_rnn.w_h &&
         history_rnn.b == o.history_rnn.b && same(track_scorer, o.track_scorer) && same(rec_scorer, o.rec_scorer) &&
         null_embedding == o.null_embedding && eos_embedding == o.eos_embedding && use_history == o.use_history &&
         history_mode == o.history_mode && embedding_fingerprint == o.embedding_fingerprint;
}

GuidanceBundle init_guidance(const EmbeddingBundle& embeddings, const GuidanceConfig& c, numkit::Rng& rng) {
  if (c.rnn_hidden < 1 || c.scorer_hidden < 1) throw ConfigError("guidance dimensions must be positive");
  const int d = embeddings.feature_dim(), e = embeddings.embedding_dim();
  GuidanceBundle b;
  b.history_rnn = numkit::make_rnn(rng, e, c.rnn_hidden);
  b.track_scorer = numkit::make_mlp2(rng, d + c.rnn_hidden + e, c.scorer_hidden, 1);
  b.rec_scorer = numkit::make_mlp2(rng, 2 * e + c.rnn_hidden, c.scorer_hidden, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  b.null_embedding.resize(e);
  b.eos_embedding.resize(e);
  for (int i = 0; i < e; ++i) b.null_embedding(i) = normal(rng);
  for (int i = 0; i < e; ++i) b.eos_embedding(i) = normal(rng);
  b.use_history = c.use_history;
  b.history_mode = c.history_mode;
  b.embedding_fingerprint = fingerprint(embeddings);
  return b;
}

TaskModel bind_task(std::shared_ptr<const GuidanceBundle> guidance, const EmbeddingBundle& embeddings,
                    const ActionVocabulary& vocab) {
  if (!guidance) throw UsageError("no guidance bundle");
  if (guidance->embedding_fingerprint != fingerprint(embeddings)) {
    throw ConfigError("guidance bundle was trained against a different embedding bundle");
  }
  guidance->validate();
  if (guidance->embedding_dim() != embeddings.embedding_dim() || guidance->feature_dim() != embeddings.feature_dim()) {
    throw ConfigError("guidance and embedding bundles disagree on dimensions");
  }
  TaskModel m{std::move(guidance), vocab, MatrixXd(vocab.id_count(), embeddings.embedding_dim())};
  m.table.row(0) = m.bundle->null_embedding.transpose();
  const auto rows = embeddings.task_rows(vocab);
  for (std::size_t i = 0; i < rows.size(); ++i) m.table.row(static_cast<Eigen::Index>(i + 1)) = embeddings.table.row(rows[i]);
  m.table.row(m.table.rows() - 1) = m.bundle->eos_embedding.transpose();
  return m;
}

TrackState initial_state(const TaskModel& m) { return TrackState{VectorXd::Zero(m.bundle->hidden_dim()), kNullAction, {}}; }

namespace {

void check_candidate(const TaskModel& m, ActionId a) {
  if (a.value >= m.vocab.id_count()) throw IndexError("candidate " + std::to_string(a.value) + " outside the task");
}

/// Logits of `scorer` over columns [context; e_c] for every candidate c, then
/// log-softmax and argmax with ties to the lower id.
StepScores score(const TaskModel& m, const numkit::Mlp2& scorer, const VectorXd& context,
                 std::span<const ActionId> candidates) {
  if (candidates.empty()) throw UsageError("empty candidate set");
  const Eigen::Index e = m.table.cols(), k = static_cast<Eigen::Index>(candidates.size());
  if (context.size() + e != scorer.input_dim()) throw ShapeError("scorer input has the wrong dimension");
  MatrixXd in(context.size() + e, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    check_candidate(m, candidates[static_cast<std::size_t>(j)]);
    in.col(j) << context, m.table.row(candidates[static_cast<std::size_t>(j)].value).transpose();
  }
  const VectorXd logits = numkit::mlp2_forward(scorer, in).row(0).transpose();
  StepScores out{candidates[0], {candidates.begin(), candidates.end()}, numkit::log_softmax(logits)};
  double best = out.log_probs(0);
  for (Eigen::Index j = 1; j < k; ++j) {
    const ActionId c = candidates[static_cast<std::size_t>(j)];
    if (out.log_probs(j) > best || (out.log_probs(j) == best && c < out.action)) {
      best = out.log_probs(j);
      out.action = c;
    }
  }
  return out;
}

}  // namespace

StepScores track_step(const TaskModel& m, const TrackState& state, const VectorXd& x,
                      std::span<const ActionId> candidates) {
  if (x.size() != m.bundle->feature_dim()) {
    throw ShapeError("observation has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(m.bundle->feature_dim()));
  }
  VectorXd ctx(x.size() + state.h.size());
  ctx << x, state.h;
  return score(m, m.bundle->track_scorer, ctx, candidates);
}

TrackState advance_history(const TaskModel& m, TrackState state, ActionId a) {
  if (a == kNullAction) throw UsageError("NULL never enters the action history");
  if (a == m.vocab.eos()) throw UsageError("EOS never enters the action history");
  check_candidate(m, a);
  if (m.bundle->use_history) {
    state.h = numkit::rnn_step(m.bundle->history_rnn, state.h, m.table.row(a.value).transpose());
  }
  state.last_action = a;
  state.history_events.push_back(a);
  return state;
}

StepScores recommend(const TaskModel& m, const Graph& g, const TrackState& state) {
  const std::vector<ActionId> cands = successors(g, state.last_action);
  if (cands.empty()) throw PlanningError("dead-end node '" + m.vocab.name(state.last_action) + "'");
  VectorXd ctx(m.table.cols() + state.h.size());
  ctx << m.table.row(state.last_action.value).transpose(), state.h;
  return score(m, m.bundle->rec_scorer, ctx, cands);
}

TrackedVideo track_video(const TaskModel& m, const FeatureStream& features) {
  std::vector<ActionId> cands{kNullAction};
  for (ActionId a : m.vocab.actions()) cands.push_back(a);
  TrackedVideo out;
  TrackState state = initial_state(m);
  ActionId prev = kNullAction;
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    const VectorXd x = features.row(t).cast<double>().transpose();
    StepScores s = track_step(m, state, x, cands);
    const ActionId a = s.action;
    if (a != kNullAction && (m.bundle->history_mode == HistoryMode::per_second || a != prev)) {
      state = advance_history(m, std::move(state), a);
    }
    prev = a;
    out.labels.push_back(a);
    out.steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace adtg
