// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic procedural tasks with a known partial order.
//
// Every frame is the concatenation of a *state* block and an *activity*
// block (half of the feature dimension each, the state block taking the
// smaller half when D is odd):
//   - the two frames of an action's pre-window carry its pre-condition state
//     centre, the two frames of its post-window its post-condition centre,
//     frames strictly inside the segment the midpoint of the two;
//   - frames inside the segment carry the action's activity centre, all other
//     frames the shared background activity;
//   - frames outside every window carry the background state.
// Gaussian noise of `noise_sigma` is added to every coordinate and the
// result is stored at 32-bit precision.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adtg/corpus/types.hpp"
#include "adtg/numkit/types.hpp"

namespace adtg {

/// Per-action centres. Rows are indexed by 0-based action index.
struct ClusterCenters {
  numkit::MatrixXd pre;
  numkit::MatrixXd post;
  numkit::MatrixXd activity;
  numkit::VectorXd background_state;
  numkit::VectorXd background_activity;
};

struct SynthTaskSpec {
  std::string task_id = "synth";
  int n_actions = 4;
  /// (before, after) pairs over 0-based action indices.
  std::vector<std::pair<int, int>> partial_order;
  int feature_dim = 16;
  double noise_sigma = 0.05;
  double null_fraction = 0.5;
  int n_videos = 50;
  std::uint64_t seed = 0;
  /// Require every pair of distinct clusters to be more than 4 sigma apart.
  bool separable = true;
  int min_segment_seconds = 3;
  int max_segment_seconds = 6;
  /// Per-action probability of being left out of a video; empty means never.
  std::vector<double> skip_probability;
  /// Groups of actions that share identical pre/post/activity centres.
  std::vector<std::vector<int>> shared_clusters;
  /// Drawn from the seed when absent.
  std::optional<ClusterCenters> centers;
  /// Action names; "a0", "a1", ... when empty.
  std::vector<std::string> action_names;
};

using EdgeSet = std::set<std::pair<ActionId, ActionId>>;

struct SynthTask {
  TaskData data;
  ClusterCenters centers;
  /// Union of consecutive pairs over all emitted sequences plus final -> EOS.
  EdgeSet successor_edges;
  /// Emitted action order of every video.
  std::vector<std::vector<ActionId>> sequences;
};

/// Throws SpecError on a cyclic partial order or an invalid spec.
SynthTask synth_generate(const SynthTaskSpec& spec);

/// Reflexive-free transitive closure: reach[a][b] iff a must precede b.
std::vector<std::vector<bool>> precedence_closure(int n, const std::vector<std::pair<int, int>>& order);

}  // namespace adtg
