// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/embedding/embedding.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "adtg/corpus/corpus.hpp"
#include "adtg/error.hpp"
#include "adtg/numkit/adam.hpp"
#include "adtg/numkit/hash.hpp"
#include "adtg/numkit/ops.hpp"

namespace adtg {

using numkit::MatrixXd;
using numkit::Var;
using numkit::VectorXd;

int EmbeddingBundle::row(const std::string& task_id, const std::string& action) const {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].first == task_id && keys[i].second == action) return static_cast<int>(i);
  }
  throw DataError("no embedding for action '" + action + "' of task '" + task_id + "'");
}

std::vector<int> EmbeddingBundle::task_rows(const ActionVocabulary& vocab) const {
  std::vector<int> rows;
  rows.reserve(vocab.size());
  for (const auto& name : vocab.names()) rows.push_back(row(vocab.task_id(), name));
  return rows;
}

void EmbeddingBundle::validate() const {
  cond_gen.validate();
  predictor.validate();
  if (cond_gen.input_dim() % 2 != 0) throw ShapeError("condition generator input must cover two frames");
  if (predictor.input_dim() != cond_gen.output_dim() + table.cols() || predictor.output_dim() != cond_gen.output_dim()) {
    throw ShapeError("transformation predictor does not match condition and embedding dims");
  }
  if (static_cast<std::size_t>(table.rows()) != keys.size()) throw ShapeError("embedding table rows differ from keys");
}

bool EmbeddingBundle::operator==(const EmbeddingBundle& o) const {
  auto same = [](const numkit::Mlp2& a, const numkit::Mlp2& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 && a.activation == b.activation;
  };
  return same(cond_gen, o.cond_gen) && same(predictor, o.predictor) && table == o.table && keys == o.keys &&
         margin == o.margin;
}

std::uint64_t fingerprint(const EmbeddingBundle& b) {
  numkit::Fnv1a h;
  for (const numkit::Mlp2* p : {&b.cond_gen, &b.predictor}) {
    h.matrix(p->w1);
    h.matrix(p->b1);
    h.matrix(p->w2);
    h.matrix(p->b2);
  }
  h.matrix(b.table);
  for (const auto& [task, action] : b.keys) {
    h.text(task);
    h.text(action);
  }
  h.bytes(&b.margin, sizeof b.margin);
  return h.value();
}

namespace {

std::vector<EmbeddingKey> all_keys(std::span<const ActionVocabulary> vocabs) {
  std::vector<EmbeddingKey> keys;
  for (const auto& v : vocabs) {
    for (const auto& n : v.names()) keys.emplace_back(v.task_id(), n);
  }
  return keys;
}

void check_config(const EmbeddingConfig& c, int feature_dim) {
  if (feature_dim < 1 || c.condition_dim < 1 || c.embedding_dim < 1 || c.hidden_dim < 1) {
    throw ConfigError("embedding dimensions must be positive");
  }
  if (!(c.margin > 0)) throw ConfigError("margin must be positive");
  if (!(c.learning_rate >= 0) || c.epochs < 0) throw ConfigError("embedding learning rate and epochs must be non-negative");
}

EmbeddingBundle init_networks(int feature_dim, int embedding_dim, const EmbeddingConfig& c, numkit::Rng& rng) {
  EmbeddingBundle b;
  b.cond_gen = numkit::make_mlp2(rng, 2 * feature_dim, c.hidden_dim, c.condition_dim);
  b.predictor = numkit::make_mlp2(rng, c.condition_dim + embedding_dim, c.hidden_dim, c.condition_dim);
  b.margin = c.margin;
  return b;
}

}  // namespace

EmbeddingBundle init_embeddings(std::span<const ActionVocabulary> vocabs, int feature_dim,
                                const EmbeddingConfig& config, numkit::Rng& rng) {
  check_config(config, feature_dim);
  EmbeddingBundle b = init_networks(feature_dim, config.embedding_dim, config, rng);
  b.keys = all_keys(vocabs);
  std::normal_distribution<double> normal(0.0, 1.0);
  b.table.resize(static_cast<Eigen::Index>(b.keys.size()), config.embedding_dim);
  for (Eigen::Index i = 0; i < b.table.rows(); ++i)
    for (Eigen::Index j = 0; j < b.table.cols(); ++j) b.table(i, j) = normal(rng);
  return b;
}

EmbeddingBundle onehot_embeddings(std::span<const ActionVocabulary> vocabs, int feature_dim,
                                  const EmbeddingConfig& config, numkit::Rng& rng) {
  check_config(config, feature_dim);
  auto keys = all_keys(vocabs);
  const int n = static_cast<int>(keys.size());
  EmbeddingBundle b = init_networks(feature_dim, n, config, rng);
  b.keys = std::move(keys);
  b.table = MatrixXd::Identity(n, n);
  return b;
}

VectorXd condition_features(const EmbeddingBundle& b, const MatrixXd& window) {
  if (window.rows() != 2 || window.cols() != b.feature_dim()) {
    throw ShapeError("condition window must be 2 x " + std::to_string(b.feature_dim()) + ", got " +
                     std::to_string(window.rows()) + " x " + std::to_string(window.cols()));
  }
  return numkit::mlp2_forward(b.cond_gen, flatten_window(window));
}

VectorXd predict_post(const EmbeddingBundle& b, const VectorXd& f_pre, const VectorXd& e) {
  if (f_pre.size() != b.condition_dim() || e.size() != b.embedding_dim()) {
    throw ShapeError("predictor inputs must be " + std::to_string(b.condition_dim()) + " + " +
                     std::to_string(b.embedding_dim()));
  }
  VectorXd in(f_pre.size() + e.size());
  in << f_pre, e;
  return numkit::mlp2_forward(b.predictor, in);
}

VectorXd candidate_distances(const EmbeddingBundle& b, const MatrixXd& pre, const MatrixXd& post,
                             std::span<const int> rows) {
  const VectorXd f_pre = condition_features(b, pre);
  const VectorXd f_post = condition_features(b, post);
  MatrixXd in(b.condition_dim() + b.embedding_dim(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j] < 0 || rows[j] >= b.table.rows()) throw IndexError("embedding row " + std::to_string(rows[j]));
    in.col(static_cast<Eigen::Index>(j)) << f_pre, b.table.row(rows[j]).transpose();
  }
  const MatrixXd pred = numkit::mlp2_forward(b.predictor, in);
  VectorXd d(pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) d(j) = numkit::cosine_distance(pred.col(j), f_post);
  return d;
}

double disc_loss(const EmbeddingBundle& b, const MatrixXd& pre, const MatrixXd& post, int row) {
  const int rows[] = {row};
  return candidate_distances(b, pre, post, rows)(0);
}

double cont_loss(const EmbeddingBundle& b, const MatrixXd& pre, const MatrixXd& post, int row,
                 std::span<const int> negatives) {
  if (std::find(negatives.begin(), negatives.end(), row) != negatives.end()) {
    throw UsageError("the positive action is listed among its negatives");
  }
  if (negatives.empty()) return 0.0;
  const VectorXd d = candidate_distances(b, pre, post, negatives);
  return (b.margin - d.array()).max(0.0).sum();
}

EmbeddingVars bind(numkit::Tape& tape, const EmbeddingBundle& b, bool trainable) {
  return {numkit::bind(tape, b.cond_gen, trainable), numkit::bind(tape, b.predictor, trainable),
          trainable ? tape.variable_ref(b.table) : tape.constant_ref(b.table)};
}

Var segment_loss(const EmbeddingVars& v, const VectorXd& pre, const VectorXd& post, int row,
                 std::span<const int> negatives, double margin) {
  numkit::Tape& tape = *v.table.tape();
  MatrixXd windows(pre.size(), 2);
  windows << pre, post;
  const Var f = numkit::mlp2(v.cond_gen, tape.constant(windows));
  const Var f_pre = numkit::select_cols(f, {0});
  const Var f_post = numkit::select_cols(f, {1});

  std::vector<Eigen::Index> rows{row};
  rows.insert(rows.end(), negatives.begin(), negatives.end());
  const Var e = numkit::gather_rows(v.table, rows);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Var pred = numkit::mlp2(v.predictor, numkit::concat_rows<double>({numkit::repeat_cols(f_pre, n), e}));
  const Var d = numkit::cosine_distance_cols(pred, f_post);

  Var loss = numkit::entry(d, 0, 0);
  if (n > 1) {
    std::vector<Eigen::Index> neg(static_cast<std::size_t>(n - 1));
    std::iota(neg.begin(), neg.end(), 1);
    loss = loss + numkit::sum(numkit::relu(margin - numkit::select_cols(d, neg)));
  }
  return loss;
}

namespace {

struct TrainingSegment {
  VectorXd pre, post;
  int row = 0;
  std::vector<int> negatives;
};

std::vector<numkit::ParamRef<double>> param_refs(EmbeddingBundle& b) {
  using R = numkit::ParamRef<double>;
  return {R::of("cond_gen.w1", b.cond_gen.w1),   R::of("cond_gen.b1", b.cond_gen.b1),
          R::of("cond_gen.w2", b.cond_gen.w2),   R::of("cond_gen.b2", b.cond_gen.b2),
          R::of("predictor.w1", b.predictor.w1), R::of("predictor.b1", b.predictor.b1),
          R::of("predictor.w2", b.predictor.w2), R::of("predictor.b2", b.predictor.b2),
          R::of("table", b.table)};
}

}  // namespace

EmbeddingBundle train_embeddings(const Corpus& train, const EmbeddingConfig& config, std::uint64_t seed,
                                 EmbeddingTrainLog* log) {
  std::vector<ActionVocabulary> vocabs;
  for (const auto& t : train.tasks) vocabs.push_back(t.vocab);
  numkit::Rng rng(seed);
  EmbeddingBundle b = init_embeddings(vocabs, train.feature_dim(), config, rng);

  std::vector<TrainingSegment> segments;
  for (const auto& task : train.tasks) {
    const std::vector<int> rows = b.task_rows(task.vocab);
    for (const auto& video : task.videos) {
      for (const auto& seg : video.segments) {
        const auto w = condition_windows(video, seg);
        TrainingSegment s{flatten_window(w.pre), flatten_window(w.post), rows[seg.action.value - 1], {}};
        if (config.cross_task_negatives) {
          for (int r = 0; r < b.table.rows(); ++r)
            if (r != s.row) s.negatives.push_back(r);
        } else {
          for (int r : rows)
            if (r != s.row) s.negatives.push_back(r);
        }
        segments.push_back(std::move(s));
      }
    }
  }
  if (segments.empty()) throw TrainingError("no annotated segments to train embeddings on");

  numkit::AdamState<double> adam;
  const auto refs = param_refs(b);
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t i : order) {
      const TrainingSegment& s = segments[i];
      numkit::Tape tape;
      const EmbeddingVars v = bind(tape, b);
      const Var loss = segment_loss(v, s.pre, s.post, s.row, s.negatives, b.margin);
      total += loss.value()(0, 0);
      tape.backward(loss);
      const std::vector<MatrixXd> grads{v.cond_gen.w1.grad(),  v.cond_gen.b1.grad(),  v.cond_gen.w2.grad(),
                                        v.cond_gen.b2.grad(),  v.predictor.w1.grad(), v.predictor.b1.grad(),
                                        v.predictor.w2.grad(), v.predictor.b2.grad(), v.table.grad()};
      numkit::adam_step<double>(adam, refs, grads, config.learning_rate);
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(segments.size()));
  }
  return b;
}

}  // namespace adtg
