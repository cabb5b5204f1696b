// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Action embeddings learned as transformations between condition windows.
//
// A condition generator f maps a flattened 2-frame window to a condition
// vector; a transformation predictor g maps (f(pre), e_a) to a predicted
// post-condition vector. Training pulls g(f(pre), e_a) towards f(post) in
// cosine distance and pushes the other actions' predictions at least
// `margin` away.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adtg/corpus/types.hpp"
#include "adtg/numkit/autodiff.hpp"
#include "adtg/numkit/types.hpp"

namespace adtg {

struct EmbeddingConfig {
  int condition_dim = 128;
  int embedding_dim = 96;
  /// Hidden width of both f and g.
  int hidden_dim = 128;
  double margin = 0.5;
  double learning_rate = 1e-5;
  int epochs = 50;
  /// Negatives from every task instead of only the segment's own task.
  bool cross_task_negatives = false;
};

/// (task id, action name).
using EmbeddingKey = std::pair<std::string, std::string>;

struct EmbeddingBundle {
  numkit::Mlp2 cond_gen;   // 2D -> condition_dim
  numkit::Mlp2 predictor;  // condition_dim + embedding_dim -> condition_dim
  /// One row per action across all tasks, in `keys` order.
  numkit::MatrixXd table;
  std::vector<EmbeddingKey> keys;
  double margin = 0.5;

  int feature_dim() const { return static_cast<int>(cond_gen.input_dim() / 2); }
  int condition_dim() const { return static_cast<int>(cond_gen.output_dim()); }
  int embedding_dim() const { return static_cast<int>(table.cols()); }

  /// Throws DataError when the action has no row.
  int row(const std::string& task_id, const std::string& action) const;
  /// Rows of actions 1..n of `vocab`, in id order.
  std::vector<int> task_rows(const ActionVocabulary& vocab) const;

  /// Throws ShapeError when a component does not match the others.
  void validate() const;

  bool operator==(const EmbeddingBundle& o) const;
};

/// 64-bit FNV-1a over every parameter's bit pattern, the keys and the margin.
std::uint64_t fingerprint(const EmbeddingBundle& b);

/// Seeded initialization: f and g uniform in +-1/sqrt(fan_in), table rows N(0, 1).
/// Rows are created for every action of every vocabulary, in vocabulary order.
EmbeddingBundle init_embeddings(std::span<const ActionVocabulary> vocabs, int feature_dim,
                                const EmbeddingConfig& config, numkit::Rng& rng);

/// Frozen identity rows: embedding_dim equals the total action count.
EmbeddingBundle onehot_embeddings(std::span<const ActionVocabulary> vocabs, int feature_dim,
                                  const EmbeddingConfig& config, numkit::Rng& rng);

/// f over a 2 x D window. ShapeError on any other shape.
numkit::VectorXd condition_features(const EmbeddingBundle& b, const numkit::MatrixXd& window);

numkit::VectorXd predict_post(const EmbeddingBundle& b, const numkit::VectorXd& f_pre, const numkit::VectorXd& e);

/// Cosine distance between g(f(pre), e_row) and f(post).
double disc_loss(const EmbeddingBundle& b, const numkit::MatrixXd& pre, const numkit::MatrixXd& post, int row);

/// Sum over negatives of max(0, margin - distance). UsageError if `row` is a negative.
double cont_loss(const EmbeddingBundle& b, const numkit::MatrixXd& pre, const numkit::MatrixXd& post, int row,
                 std::span<const int> negatives);

/// Distance of every listed row's prediction from f(post), in `rows` order.
numkit::VectorXd candidate_distances(const EmbeddingBundle& b, const numkit::MatrixXd& pre,
                                     const numkit::MatrixXd& post, std::span<const int> rows);

/// Parameter handles on a tape, in the order cond_gen, predictor, table.
struct EmbeddingVars {
  numkit::Mlp2Vars<double> cond_gen;
  numkit::Mlp2Vars<double> predictor;
  numkit::Var table;
};
EmbeddingVars bind(numkit::Tape& tape, const EmbeddingBundle& b, bool trainable = true);

/// disc + cont for one segment on a tape. `pre` and `post` are flattened windows (2D).
numkit::Var segment_loss(const EmbeddingVars& v, const numkit::VectorXd& pre, const numkit::VectorXd& post, int row,
                         std::span<const int> negatives, double margin);

struct EmbeddingTrainLog {
  /// Mean segment loss seen during each epoch.
  std::vector<double> epoch_loss;
};

/// Online Adam over every annotated segment of `train`, one step per segment,
/// order reshuffled each epoch from `seed`. Throws TrainingError when the
/// corpus has no segments.
EmbeddingBundle train_embeddings(const Corpus& train, const EmbeddingConfig& config, std::uint64_t seed,
                                 EmbeddingTrainLog* log = nullptr);

}  // namespace adtg
