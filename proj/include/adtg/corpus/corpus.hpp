// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adtg/corpus/types.hpp"
#include "adtg/numkit/types.hpp"

namespace adtg {

/// Rounds to the nearest integer, halves upward.
int round_half_up(double t);

/// Rounded inclusive second range [first, last] covered by a segment.
struct SecondRange {
  int first = 0;
  int last = 0;
};
SecondRange rounded_range(const Segment& seg);

/// Checks segment bounds, ordering, vocabulary membership and overlap.
/// Throws DataError naming the video.
void validate_video(const VideoRecord& video, const ActionVocabulary& vocab);

/// Action id for every second 1..T (element t-1); NULL where nothing is annotated.
std::vector<ActionId> framewise_labels(const VideoRecord& video, const ActionVocabulary& vocab);

/// Two-frame windows around a segment's start and end, clamped at the video edges.
struct ConditionWindows {
  numkit::MatrixXd pre;   // 2 x D: frames t1-1, t1
  numkit::MatrixXd post;  // 2 x D: frames t2, t2+1
};
ConditionWindows condition_windows(const VideoRecord& video, const Segment& seg);

/// Flattens a 2 x D window into the 2D input of the condition generator.
numkit::VectorXd flatten_window(const numkit::MatrixXd& window);

/// Collapses runs and drops NULL: (0,a,a,0,b,b,a) -> (a,b,a).
std::vector<ActionId> compressed_sequence(std::span<const ActionId> labels);

/// Action-change events: seconds t (0-based) where a non-NULL label starts a new run.
std::vector<int> action_change_seconds(std::span<const ActionId> labels);

/// Deterministic shuffle, then 50 train / 20 val / rest test when there are
/// enough videos, otherwise 60/20/20 with at least one video per split.
Split split_dataset(std::vector<std::string> video_ids, std::uint64_t seed);

struct TaskStats {
  std::string task_id;
  std::size_t videos = 0;
  std::size_t action_space = 0;
  double mean_compressed_length = 0;
  double null_fraction = 0;
};

std::vector<TaskStats> corpus_stats(const Corpus& corpus);
std::string format_stats_table(const std::vector<TaskStats>& stats);

}  // namespace adtg
