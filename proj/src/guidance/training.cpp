// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>

#include "adtg/corpus/corpus.hpp"
#include "adtg/error.hpp"
#include "adtg/guidance/guidance.hpp"
#include "adtg/numkit/adam.hpp"
#include "adtg/numkit/autodiff.hpp"

namespace adtg {

using numkit::MatrixXd;
using numkit::Tape;
using numkit::Var;
using numkit::VectorXd;

namespace {

using Ref = numkit::ParamRef<double>;

void check_training(const GuidanceBundle& b, const EmbeddingBundle& e, const GuidanceConfig& c) {
  if (b.embedding_fingerprint != fingerprint(e)) {
    throw ConfigError("guidance bundle is not bound to the supplied embedding bundle");
  }
  b.validate();
  if (!(c.learning_rate >= 0) || c.tracker_epochs < 0 || c.recommender_epochs < 0) {
    throw ConfigError("guidance learning rate and epochs must be non-negative");
  }
}

/// Per-task embedding rows as tape values: rows NULL, actions..., EOS.
struct TableVars {
  Var null_row, eos_row, table;
};

TableVars bind_table(Tape& tape, const GuidanceBundle& b, const MatrixXd& actions, bool train_null, bool train_eos) {
  const MatrixXd null_row = b.null_embedding.transpose(), eos_row = b.eos_embedding.transpose();
  TableVars v;
  v.null_row = train_null ? tape.variable(null_row) : tape.constant(null_row);
  v.eos_row = train_eos ? tape.variable(eos_row) : tape.constant(eos_row);
  v.table = numkit::concat_rows<double>({v.null_row, tape.constant(actions), v.eos_row});
  return v;
}

Var history(Tape& tape, const numkit::RnnVars<double>* rnn, const Var& table, std::span<const ActionId> events,
            Eigen::Index hidden) {
  Var h = tape.constant(MatrixXd::Zero(hidden, 1));
  if (!rnn) return h;
  for (ActionId a : events) h = numkit::rnn_step(*rnn, h, numkit::gather_rows(table, {a.value}));
  return h;
}

std::vector<Ref> rnn_refs(GuidanceBundle& b) {
  return {Ref::of("history_rnn.w_in", b.history_rnn.w_in), Ref::of("history_rnn.w_h", b.history_rnn.w_h),
          Ref::of("history_rnn.b", b.history_rnn.b)};
}

std::vector<Ref> mlp_refs(const std::string& name, numkit::Mlp2& p) {
  return {Ref::of(name + ".w1", p.w1), Ref::of(name + ".b1", p.b1), Ref::of(name + ".w2", p.w2),
          Ref::of(name + ".b2", p.b2)};
}

void append_grads(std::vector<MatrixXd>& out, const numkit::RnnVars<double>& v) {
  out.push_back(v.w_in.grad());
  out.push_back(v.w_h.grad());
  out.push_back(v.b.grad());
}

void append_grads(std::vector<MatrixXd>& out, const numkit::Mlp2Vars<double>& v) {
  out.push_back(v.w1.grad());
  out.push_back(v.b1.grad());
  out.push_back(v.w2.grad());
  out.push_back(v.b2.grad());
}

struct TaskTables {
  const TaskData* task;
  MatrixXd actions;  // n x E
};

std::vector<TaskTables> task_tables(const Corpus& train, const EmbeddingBundle& e) {
  std::vector<TaskTables> out;
  for (const auto& t : train.tasks) {
    TaskTables tt{&t, MatrixXd(t.vocab.size(), e.embedding_dim())};
    const auto rows = e.task_rows(t.vocab);
    for (std::size_t i = 0; i < rows.size(); ++i) tt.actions.row(static_cast<Eigen::Index>(i)) = e.table.row(rows[i]);
    out.push_back(std::move(tt));
  }
  return out;
}

}  // namespace

Var track_loss(const numkit::RnnVars<double>* rnn, const numkit::Mlp2Vars<double>& scorer, const Var& table,
               std::span<const ActionId> events, const MatrixXd& x, std::span<const ActionId> labels,
               Eigen::Index hidden_dim) {
  const Eigen::Index S = x.cols();
  const Eigen::Index k = table.rows() - 1;  // NULL + actions
  if (S == 0 || static_cast<std::size_t>(S) != labels.size()) throw ShapeError("track_loss: one label per second");
  Tape& tape = *table.tape();
  const Var h = history(tape, rnn, table, events, hidden_dim);
  MatrixXd xs(x.rows(), S * k);
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(S * k));
  std::vector<Eigen::Index> targets(static_cast<std::size_t>(S));
  for (Eigen::Index s = 0; s < S; ++s) {
    xs.middleCols(s * k, k) = x.col(s).replicate(1, k);
    for (Eigen::Index c = 0; c < k; ++c) ids[static_cast<std::size_t>(s * k + c)] = c;
    const ActionId a = labels[static_cast<std::size_t>(s)];
    if (static_cast<Eigen::Index>(a.value) >= k) throw UsageError("track_loss: label outside {NULL} and the actions");
    targets[static_cast<std::size_t>(s)] = a.value;
  }
  const Var in =
      numkit::concat_rows<double>({tape.constant(xs), numkit::repeat_cols(h, S * k), numkit::gather_rows(table, ids)});
  const Var logits = numkit::reshape(numkit::mlp2(scorer, in), k, S);
  return (1.0 / static_cast<double>(S)) * numkit::softmax_cross_entropy_cols(logits, targets);
}

Var recommend_loss(const numkit::RnnVars<double>* rnn, const numkit::Mlp2Vars<double>& scorer, const Var& table,
                   std::span<const ActionId> history_actions, std::span<const ActionId> candidates, ActionId next,
                   Eigen::Index hidden_dim) {
  if (history_actions.empty()) throw UsageError("recommend_loss: empty history");
  const auto it = std::find(candidates.begin(), candidates.end(), next);
  if (it == candidates.end()) throw UsageError("recommend_loss: target is not a candidate");
  Tape& tape = *table.tape();
  const Var h = history(tape, rnn, table, history_actions, hidden_dim);
  const Eigen::Index k = static_cast<Eigen::Index>(candidates.size());
  std::vector<Eigen::Index> ids;
  for (ActionId c : candidates) ids.push_back(c.value);
  const Var last = numkit::gather_rows(table, {history_actions.back().value});
  const Var in = numkit::concat_rows<double>(
      {numkit::repeat_cols(last, k), numkit::repeat_cols(h, k), numkit::gather_rows(table, ids)});
  return numkit::softmax_cross_entropy(numkit::mlp2(scorer, in), it - candidates.begin());
}

namespace {

// ---------------------------------------------------------------------------
// Tracker

struct TrackVideo {
  std::size_t task = 0;
  MatrixXd x;  // D x T
  std::vector<ActionId> labels;
  std::vector<int> advance_after;  // 0-based seconds after which the history advances
};

/// Seconds [first, last] (0-based) scored against one history state.
struct TrackSpan {
  std::size_t video = 0;
  int first = 0, last = 0;
  std::size_t history_len = 0;
};

}  // namespace

void train_tracker(GuidanceBundle& bundle, const Corpus& train, const EmbeddingBundle& embeddings,
                   const GuidanceConfig& config, std::uint64_t seed, GuidanceTrainLog* log) {
  check_training(bundle, embeddings, config);
  const auto tables = task_tables(train, embeddings);
  std::vector<TrackVideo> videos;
  std::vector<TrackSpan> spans;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    const TaskData& task = *tables[ti].task;
    for (const auto& v : task.videos) {
      if (v.feature_dim() != bundle.feature_dim()) throw ShapeError("video '" + v.video_id + "' has the wrong feature dim");
      TrackVideo tv{ti, v.features.cast<double>().transpose(), framewise_labels(v, task.vocab), {}};
      for (int t = 0; t < v.duration(); ++t) {
        const ActionId a = tv.labels[static_cast<std::size_t>(t)];
        const ActionId prev = t > 0 ? tv.labels[static_cast<std::size_t>(t - 1)] : kNullAction;
        if (a != kNullAction && (bundle.history_mode == HistoryMode::per_second || a != prev)) tv.advance_after.push_back(t);
      }
      int start = 0;
      for (std::size_t i = 0; i <= tv.advance_after.size(); ++i) {
        const int end = i < tv.advance_after.size() ? tv.advance_after[i] : v.duration() - 1;
        if (end >= start) spans.push_back({videos.size(), start, end, i});
        start = end + 1;
      }
      videos.push_back(std::move(tv));
    }
  }
  if (spans.empty()) throw TrainingError("no training seconds for the tracker");

  const bool hist = bundle.use_history;
  std::vector<Ref> refs;
  if (hist) refs = rnn_refs(bundle);
  for (auto& r : mlp_refs("track_scorer", bundle.track_scorer)) refs.push_back(r);
  refs.push_back(Ref::of("null_embedding", bundle.null_embedding));

  numkit::Rng rng(seed);
  numkit::AdamState<double> adam;
  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.tracker_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t si : order) {
      const TrackSpan& sp = spans[si];
      const TrackVideo& tv = videos[sp.video];
      const TaskTables& tt = tables[tv.task];
      Tape tape;
      numkit::RnnVars<double> rnn;
      if (hist) rnn = numkit::bind(tape, bundle.history_rnn);
      const auto scorer = numkit::bind(tape, bundle.track_scorer);
      const TableVars tv_vars = bind_table(tape, bundle, tt.actions, true, false);
      std::vector<ActionId> events;
      for (std::size_t i = 0; i < sp.history_len; ++i) {
        events.push_back(tv.labels[static_cast<std::size_t>(tv.advance_after[i])]);
      }
      const auto labels = std::span(tv.labels).subspan(static_cast<std::size_t>(sp.first),
                                                       static_cast<std::size_t>(sp.last - sp.first + 1));
      const Var loss = track_loss(hist ? &rnn : nullptr, scorer, tv_vars.table, events,
                                  tv.x.middleCols(sp.first, sp.last - sp.first + 1), labels, bundle.hidden_dim());
      total += loss.value()(0, 0);
      tape.backward(loss);

      std::vector<MatrixXd> grads;
      if (hist) append_grads(grads, rnn);
      append_grads(grads, scorer);
      grads.push_back(tv_vars.null_row.grad().transpose());
      numkit::adam_step<double>(adam, refs, grads, config.learning_rate);
    }
    if (log) log->tracker_loss.push_back(total / static_cast<double>(spans.size()));
  }
}

// ---------------------------------------------------------------------------
// Recommender

namespace {

struct RecPair {
  std::size_t task = 0;
  std::vector<ActionId> history;  // a_1..a_t; last element is the current node
  std::vector<ActionId> candidates;
  Eigen::Index target = 0;
};

}  // namespace

void train_recommender(GuidanceBundle& bundle, const Corpus& train, std::span<const Graph> graphs,
                       const EmbeddingBundle& embeddings, const GuidanceConfig& config, std::uint64_t seed,
                       GuidanceTrainLog* log) {
  check_training(bundle, embeddings, config);
  const auto tables = task_tables(train, embeddings);
  std::vector<RecPair> pairs;
  std::size_t total_pairs = 0;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    const TaskData& task = *tables[ti].task;
    const Graph* g = nullptr;
    for (const Graph& c : graphs) {
      if (c.task_id() == task.vocab.task_id()) g = &c;
    }
    if (!g) throw ConfigError("no graph for task '" + task.vocab.task_id() + "'");
    for (const auto& v : task.videos) {
      const auto seq = compressed_sequence(framewise_labels(v, task.vocab));
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const ActionId next = i + 1 < seq.size() ? seq[i + 1] : task.vocab.eos();
        RecPair p{ti, {seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(i + 1)}, successors(*g, seq[i]), 0};
        const auto it = std::find(p.candidates.begin(), p.candidates.end(), next);
        if (it == p.candidates.end()) {
          throw TrainingError("video '" + v.video_id + "' has transition " + task.vocab.name(seq[i]) + " -> " +
                              task.vocab.name(next) + " missing from the graph");
        }
        p.target = it - p.candidates.begin();
        ++total_pairs;
        // A single candidate carries no signal: its loss is identically zero.
        if (p.candidates.size() > 1) pairs.push_back(std::move(p));
      }
    }
  }
  if (total_pairs == 0) throw TrainingError("no action pairs for the recommender");

  const bool hist = bundle.use_history;
  const bool train_rnn = hist && config.joint_rnn;
  std::vector<Ref> refs = mlp_refs("rec_scorer", bundle.rec_scorer);
  refs.push_back(Ref::of("eos_embedding", bundle.eos_embedding));
  if (train_rnn) {
    for (auto& r : rnn_refs(bundle)) refs.push_back(r);
  }

  numkit::Rng rng(seed);
  numkit::AdamState<double> adam;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.recommender_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t pi : order) {
      const RecPair& p = pairs[pi];
      const TaskTables& tt = tables[p.task];
      Tape tape;
      const auto scorer = numkit::bind(tape, bundle.rec_scorer);
      numkit::RnnVars<double> rnn;
      if (hist) rnn = numkit::bind(tape, bundle.history_rnn, train_rnn);
      const TableVars tv = bind_table(tape, bundle, tt.actions, false, true);
      const Var loss = recommend_loss(hist ? &rnn : nullptr, scorer, tv.table, p.history, p.candidates,
                                      p.candidates[static_cast<std::size_t>(p.target)], bundle.hidden_dim());
      total += loss.value()(0, 0);
      tape.backward(loss);

      std::vector<MatrixXd> grads;
      append_grads(grads, scorer);
      grads.push_back(tv.eos_row.grad().transpose());
      if (train_rnn) append_grads(grads, rnn);
      numkit::adam_step<double>(adam, refs, grads, config.learning_rate);
    }
    if (log) log->recommender_loss.push_back(total / static_cast<double>(total_pairs));
  }
}

}  // namespace adtg
