// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adtg {

/// Index of an action inside one task's vocabulary. 0 is NULL and
/// `size() + 1` is EOS; real actions are 1..size().
struct ActionId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const ActionId&) const = default;
};

inline constexpr ActionId kNullAction{0};

class ActionVocabulary {
 public:
  ActionVocabulary() = default;
  ActionVocabulary(std::string task_id, std::vector<std::string> actions);

  const std::string& task_id() const { return task_id_; }
  /// Number of real (non-reserved) actions.
  std::size_t size() const { return actions_.size(); }
  /// Number of ids including NULL and EOS.
  std::size_t id_count() const { return actions_.size() + 2; }

  ActionId eos() const { return ActionId{static_cast<std::uint32_t>(actions_.size() + 1)}; }
  bool is_action(ActionId a) const { return a.value >= 1 && a.value <= actions_.size(); }

  std::optional<ActionId> find(std::string_view name) const;
  /// Throws DataError naming the action when it is not in the vocabulary.
  ActionId id(std::string_view name) const;
  std::string name(ActionId a) const;
  const std::vector<std::string>& names() const { return actions_; }
  std::vector<ActionId> actions() const;

  bool operator==(const ActionVocabulary& o) const { return task_id_ == o.task_id_ && actions_ == o.actions_; }

 private:
  std::string task_id_;
  std::vector<std::string> actions_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Per-second features of one video, T rows by D columns. Stored at the
/// 32-bit precision of the on-disk format.
using FeatureStream = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Segment {
  ActionId action;
  double t_start = 0;
  double t_end = 0;
  bool operator==(const Segment&) const = default;
};

struct VideoRecord {
  std::string video_id;
  std::string task_id;
  FeatureStream features;
  std::vector<Segment> segments;

  /// T, the number of one-second feature rows.
  int duration() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

struct TaskData {
  ActionVocabulary vocab;
  std::vector<VideoRecord> videos;

  const VideoRecord& video(std::string_view id) const;
};

struct Corpus {
  std::vector<TaskData> tasks;

  const TaskData& task(std::string_view id) const;
  int feature_dim() const;
  std::size_t video_count() const;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

}  // namespace adtg
