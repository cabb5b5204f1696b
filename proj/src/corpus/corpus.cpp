// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "adtg/error.hpp"

namespace adtg {

ActionVocabulary::ActionVocabulary(std::string task_id, std::vector<std::string> actions)
    : task_id_(std::move(task_id)), actions_(std::move(actions)) {
  if (task_id_.empty()) throw DataError("vocabulary without a task id");
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const std::string& n = actions_[i];
    if (n.empty()) throw DataError("empty action name in task '" + task_id_ + "'");
    if (n == "<NULL>" || n == "<EOS>") throw DataError("reserved action name '" + n + "' in task '" + task_id_ + "'");
    if (!index_.emplace(n, static_cast<std::uint32_t>(i + 1)).second) {
      throw DataError("duplicate action '" + n + "' in task '" + task_id_ + "'");
    }
  }
}

std::optional<ActionId> ActionVocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return ActionId{it->second};
}

ActionId ActionVocabulary::id(std::string_view name) const {
  if (auto a = find(name)) return *a;
  throw DataError("unknown action '" + std::string(name) + "' in task '" + task_id_ + "'");
}

std::string ActionVocabulary::name(ActionId a) const {
  if (a == kNullAction) return "<NULL>";
  if (a == eos()) return "<EOS>";
  if (!is_action(a)) throw IndexError("action id " + std::to_string(a.value) + " outside task '" + task_id_ + "'");
  return actions_[a.value - 1];
}

std::vector<ActionId> ActionVocabulary::actions() const {
  std::vector<ActionId> out;
  out.reserve(actions_.size());
  for (std::uint32_t i = 1; i <= actions_.size(); ++i) out.push_back(ActionId{i});
  return out;
}

const VideoRecord& TaskData::video(std::string_view id) const {
  for (const auto& v : videos) {
    if (v.video_id == id) return v;
  }
  throw UsageError("unknown video '" + std::string(id) + "' in task '" + vocab.task_id() + "'");
}

const TaskData& Corpus::task(std::string_view id) const {
  for (const auto& t : tasks) {
    if (t.vocab.task_id() == id) return t;
  }
  throw UsageError("unknown task '" + std::string(id) + "'");
}

int Corpus::feature_dim() const {
  for (const auto& t : tasks) {
    for (const auto& v : t.videos) return v.feature_dim();
  }
  return 0;
}

std::size_t Corpus::video_count() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.videos.size();
  return n;
}

int round_half_up(double t) { return static_cast<int>(std::floor(t + 0.5)); }

SecondRange rounded_range(const Segment& seg) { return {round_half_up(seg.t_start), round_half_up(seg.t_end)}; }

void validate_video(const VideoRecord& video, const ActionVocabulary& vocab) {
  const int T = video.duration();
  int prev_last = 0;
  for (const Segment& s : video.segments) {
    if (!(s.t_start >= 0) || !(s.t_start < s.t_end)) {
      throw DataError("video '" + video.video_id + "': segment needs 0 <= t_start < t_end");
    }
    if (!vocab.is_action(s.action)) {
      throw DataError("video '" + video.video_id + "': segment action outside the task vocabulary");
    }
    const SecondRange r = rounded_range(s);
    if (r.first < 1 || r.last > T) {
      throw DataError("video '" + video.video_id + "': segment [" + std::to_string(s.t_start) + ", " +
                      std::to_string(s.t_end) + "] rounds outside seconds 1.." + std::to_string(T));
    }
    if (r.first <= prev_last) {
      throw DataError("video '" + video.video_id + "': overlapping segments at second " + std::to_string(r.first));
    }
    prev_last = r.last;
  }
}

std::vector<ActionId> framewise_labels(const VideoRecord& video, const ActionVocabulary& vocab) {
  validate_video(video, vocab);
  std::vector<ActionId> labels(static_cast<std::size_t>(video.duration()), kNullAction);
  for (const Segment& s : video.segments) {
    const SecondRange r = rounded_range(s);
    for (int t = r.first; t <= r.last; ++t) labels[static_cast<std::size_t>(t - 1)] = s.action;
  }
  return labels;
}

ConditionWindows condition_windows(const VideoRecord& video, const Segment& seg) {
  const int T = video.duration();
  const SecondRange r = rounded_range(seg);
  auto frame = [&](int t) {
    const int clamped = std::clamp(t, 1, T);
    return video.features.row(clamped - 1).cast<double>();
  };
  ConditionWindows w;
  w.pre.resize(2, video.feature_dim());
  w.post.resize(2, video.feature_dim());
  w.pre.row(0) = frame(r.first - 1);
  w.pre.row(1) = frame(r.first);
  w.post.row(0) = frame(r.last);
  w.post.row(1) = frame(r.last + 1);
  return w;
}

numkit::VectorXd flatten_window(const numkit::MatrixXd& window) {
  if (window.rows() != 2) throw ShapeError("condition window must have exactly 2 frames");
  numkit::VectorXd v(2 * window.cols());
  v.head(window.cols()) = window.row(0).transpose();
  v.tail(window.cols()) = window.row(1).transpose();
  return v;
}

std::vector<ActionId> compressed_sequence(std::span<const ActionId> labels) {
  std::vector<ActionId> out;
  for (int t : action_change_seconds(labels)) out.push_back(labels[static_cast<std::size_t>(t)]);
  return out;
}

std::vector<int> action_change_seconds(std::span<const ActionId> labels) {
  std::vector<int> out;
  ActionId prev = kNullAction;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] != kNullAction && labels[t] != prev) out.push_back(static_cast<int>(t));
    prev = labels[t];
  }
  return out;
}

Split split_dataset(std::vector<std::string> video_ids, std::uint64_t seed) {
  const std::size_t n = video_ids.size();
  if (n < 3) throw DataError("need at least 3 videos to split, got " + std::to_string(n));
  std::sort(video_ids.begin(), video_ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(video_ids.begin(), video_ids.end(), rng);

  std::size_t n_train = 50, n_val = 20;
  if (n < n_train + n_val + 1) {
    n_val = std::max<std::size_t>(1, n / 5);
    const std::size_t n_test = std::max<std::size_t>(1, n / 5);
    n_train = n - n_val - n_test;
  }
  Split s;
  s.train.assign(video_ids.begin(), video_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(video_ids.begin() + static_cast<std::ptrdiff_t>(n_train),
               video_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(video_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), video_ids.end());
  return s;
}

std::vector<TaskStats> corpus_stats(const Corpus& corpus) {
  std::vector<TaskStats> out;
  for (const TaskData& task : corpus.tasks) {
    TaskStats st;
    st.task_id = task.vocab.task_id();
    st.videos = task.videos.size();
    st.action_space = task.vocab.size();
    std::size_t seconds = 0, null_seconds = 0, steps = 0;
    for (const VideoRecord& v : task.videos) {
      const auto labels = framewise_labels(v, task.vocab);
      seconds += labels.size();
      null_seconds += static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNullAction));
      steps += compressed_sequence(labels).size();
    }
    if (st.videos > 0) st.mean_compressed_length = static_cast<double>(steps) / static_cast<double>(st.videos);
    if (seconds > 0) st.null_fraction = static_cast<double>(null_seconds) / static_cast<double>(seconds);
    out.push_back(std::move(st));
  }
  return out;
}

std::string format_stats_table(const std::vector<TaskStats>& stats) {
  std::size_t width = 4;
  for (const auto& s : stats) width = std::max(width, s.task_id.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "task" << "  " << std::right << std::setw(6) << "videos"
     << "  " << std::setw(12) << "action_space" << "  " << std::setw(10) << "mean_steps" << "  " << std::setw(9)
     << "null_frac" << '\n';
  for (const auto& s : stats) {
    os << std::left << std::setw(static_cast<int>(width)) << s.task_id << "  " << std::right << std::setw(6) << s.videos
       << "  " << std::setw(12) << s.action_space << "  " << std::setw(10) << std::fixed << std::setprecision(2)
       << s.mean_compressed_length << "  " << std::setw(8) << std::setprecision(0) << s.null_fraction * 100 << "%"
       << '\n';
  }
  return os.str();
}

}  // namespace adtg
