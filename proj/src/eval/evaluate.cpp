// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "adtg/corpus/corpus.hpp"
#include "adtg/error.hpp"
#include "adtg/eval/metrics.hpp"
#include "adtg/numkit/hash.hpp"
#include "json.hpp"

namespace adtg {

using numkit::VectorXd;

const char* to_string(EvalMode m) {
  switch (m) {
    case EvalMode::tracking: return "tracking";
    case EvalMode::recommendation: return "recommendation";
    case EvalMode::plan_complete: return "plan_complete";
    case EvalMode::plan_prefix: return "plan_prefix";
  }
  return "?";
}

EvalMode eval_mode_from_string(const std::string& s) {
  for (EvalMode m : {EvalMode::tracking, EvalMode::recommendation, EvalMode::plan_complete, EvalMode::plan_prefix}) {
    if (s == to_string(m)) return m;
  }
  throw UsageError("unknown evaluation mode '" + s + "' (expected tracking, recommendation, plan_complete or plan_prefix)");
}

std::vector<std::string> metric_names(EvalMode mode) {
  switch (mode) {
    case EvalMode::tracking: return {"accuracy", "accuracy_excl_null"};
    case EvalMode::recommendation: return {"accuracy", "loglik_prediction", "loglik_ground_truth", "loglik_skipped"};
    case EvalMode::plan_complete:
    case EvalMode::plan_prefix: return {"accuracy", "miou", "length_error"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Models

AdtgModel::AdtgModel(TaskModel model, Graph graph, PlanOptions options)
    : model_(std::move(model)), graph_(std::move(graph)), options_(options) {
  if (!(graph_.vocab() == model_.vocab)) throw ConfigError("graph and model belong to different tasks");
}

TrackedVideo AdtgModel::track(const VideoRecord& video) const { return track_video(model_, video.features); }

std::optional<StepScores> AdtgModel::next(const VideoRecord&, std::span<const ActionId> history) const {
  if (history.empty()) throw UsageError("next-action scoring needs a current action");
  if (!graph_.has_node(history.back())) return std::nullopt;
  TrackState st = initial_state(model_);
  for (ActionId a : history) st = advance_history(model_, std::move(st), a);
  return recommend(model_, graph_, st);
}

std::vector<ActionId> AdtgModel::plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const {
  const VectorXd x = video.features.row(t).cast<double>().transpose();
  return adtg::plan(model_, graph_, x, prefix, options_).actions;
}

OracleModel::OracleModel(ActionVocabulary vocab) : vocab_(std::move(vocab)) {}

TrackedVideo OracleModel::track(const VideoRecord& video) const {
  TrackedVideo out;
  out.labels = framewise_labels(video, vocab_);
  for (ActionId a : out.labels) out.steps.push_back({a, {a}, VectorXd::Zero(1)});
  return out;
}

std::optional<StepScores> OracleModel::next(const VideoRecord& video, std::span<const ActionId> history) const {
  const auto seq = compressed_sequence(framewise_labels(video, vocab_));
  const std::size_t i = history.size();
  const ActionId a = i < seq.size() ? seq[i] : vocab_.eos();
  return StepScores{a, {a}, VectorXd::Zero(1)};
}

std::vector<ActionId> OracleModel::plan(const VideoRecord& video, int, std::span<const ActionId> prefix) const {
  const auto seq = compressed_sequence(framewise_labels(video, vocab_));
  const std::size_t skip = std::min(prefix.size(), seq.size());
  return {seq.begin() + static_cast<std::ptrdiff_t>(skip), seq.end()};
}

UniformModel::UniformModel(ActionVocabulary vocab, std::uint64_t seed) : vocab_(std::move(vocab)), seed_(seed) {}

namespace {

numkit::Rng video_rng(std::uint64_t seed, const VideoRecord& v, std::uint64_t stream) {
  return numkit::Rng(numkit::derive_seed(seed ^ numkit::fnv1a(v.video_id), stream));
}

StepScores uniform_step(std::vector<ActionId> cands, numkit::Rng& rng) {
  const auto n = static_cast<Eigen::Index>(cands.size());
  std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
  const ActionId a = cands[pick(rng)];
  return {a, std::move(cands), VectorXd::Constant(n, -std::log(static_cast<double>(n)))};
}

}  // namespace

TrackedVideo UniformModel::track(const VideoRecord& video) const {
  numkit::Rng rng = video_rng(seed_, video, 1);
  std::vector<ActionId> cands{kNullAction};
  for (ActionId a : vocab_.actions()) cands.push_back(a);
  TrackedVideo out;
  for (int t = 0; t < video.duration(); ++t) {
    out.steps.push_back(uniform_step(cands, rng));
    out.labels.push_back(out.steps.back().action);
  }
  return out;
}

std::optional<StepScores> UniformModel::next(const VideoRecord& video, std::span<const ActionId> history) const {
  numkit::Rng rng = video_rng(seed_, video, 2 + history.size());
  std::vector<ActionId> cands = vocab_.actions();
  cands.push_back(vocab_.eos());
  return uniform_step(std::move(cands), rng);
}

std::vector<ActionId> UniformModel::plan(const VideoRecord& video, int t, std::span<const ActionId> prefix) const {
  numkit::Rng rng = video_rng(seed_, video, 1000003 + static_cast<std::uint64_t>(t));
  const auto seq = compressed_sequence(framewise_labels(video, vocab_));
  const std::size_t len = std::max<std::size_t>(1, seq.size() - std::min(prefix.size(), seq.size()));
  const auto actions = vocab_.actions();
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  std::vector<ActionId> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(actions[pick(rng)]);
  return out;
}

// ---------------------------------------------------------------------------
// Cuts

namespace {

struct Event {
  ActionId action;
  int first = 0, last = 0;
};

std::vector<Event> events_of(std::span<const ActionId> labels) {
  std::vector<Event> out;
  for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
    const ActionId a = labels[static_cast<std::size_t>(t)];
    if (a == kNullAction) continue;
    if (!out.empty() && out.back().action == a && out.back().last == t - 1) {
      out.back().last = t;
    } else {
      out.push_back({a, t, t});
    }
  }
  return out;
}

}  // namespace

PrefixCut cut_at(const VideoRecord& video, const ActionVocabulary& vocab, int second) {
  if (second < 0 || second >= video.duration()) {
    throw UsageError("cut second " + std::to_string(second) + " outside video '" + video.video_id + "'");
  }
  PrefixCut cut;
  cut.second = second;
  for (const Event& e : events_of(framewise_labels(video, vocab))) {
    (e.last < second ? cut.prefix : cut.remainder).push_back(e.action);
  }
  return cut;
}

std::optional<PrefixCut> sample_cut(const VideoRecord& video, const ActionVocabulary& vocab, numkit::Rng& rng) {
  const auto events = events_of(framewise_labels(video, vocab));
  if (events.empty()) return std::nullopt;
  std::uniform_int_distribution<int> pick(0, events.back().last);
  return cut_at(video, vocab, pick(rng));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

using TaskMetrics = std::map<std::string, double>;

std::vector<const VideoRecord*> by_id(const TaskData& task) {
  std::vector<const VideoRecord*> out;
  for (const auto& v : task.videos) out.push_back(&v);
  std::sort(out.begin(), out.end(), [](const VideoRecord* a, const VideoRecord* b) { return a->video_id < b->video_id; });
  return out;
}

TaskMetrics eval_tracking(const TaskData& task, const GuidanceModel& m) {
  std::vector<ActionId> pred, gt;
  for (const VideoRecord* v : by_id(task)) {
    const auto labels = framewise_labels(*v, task.vocab);
    const TrackedVideo tv = m.track(*v);
    if (tv.labels.size() != labels.size()) throw UsageError("tracker output length differs for '" + v->video_id + "'");
    pred.insert(pred.end(), tv.labels.begin(), tv.labels.end());
    gt.insert(gt.end(), labels.begin(), labels.end());
  }
  TaskMetrics out;
  if (gt.empty()) return out;
  out["accuracy"] = accuracy(pred, gt);
  if (const auto x = accuracy_excl_null(pred, gt)) out["accuracy_excl_null"] = *x;
  return out;
}

TaskMetrics eval_recommendation(const TaskData& task, const GuidanceModel& m) {
  std::vector<ActionId> pred, gt, scored_gt;
  std::vector<StepScores> scored;
  std::size_t unscorable = 0;
  for (const VideoRecord* v : by_id(task)) {
    const auto seq = compressed_sequence(framewise_labels(*v, task.vocab));
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const ActionId target = i + 1 < seq.size() ? seq[i + 1] : task.vocab.eos();
      const std::span<const ActionId> history(seq.data(), i + 1);
      std::optional<StepScores> s = m.next(*v, history);
      gt.push_back(target);
      if (!s) {
        pred.push_back(kNullAction);  // never a valid next action
        ++unscorable;
        continue;
      }
      pred.push_back(s->action);
      scored_gt.push_back(target);
      scored.push_back(std::move(*s));
    }
  }
  TaskMetrics out;
  if (gt.empty()) return out;
  out["accuracy"] = accuracy(pred, gt);
  std::size_t skipped = unscorable;
  try {
    const LogLikPair ll = loglik_pair(scored, scored_gt);
    out["loglik_prediction"] = ll.prediction;
    out["loglik_ground_truth"] = ll.ground_truth;
    skipped += ll.skipped;
  } catch (const UsageError&) {
    skipped = gt.size();
  }
  out["loglik_skipped"] = static_cast<double>(skipped) / static_cast<double>(gt.size());
  return out;
}

TaskMetrics eval_planning(const TaskData& task, const GuidanceModel& m, EvalMode mode, const EvalOptions& o) {
  numkit::Rng rng(numkit::derive_seed(o.cut_seed, numkit::fnv1a(task.vocab.task_id())));
  double acc = 0, iou = 0, len_err = 0;
  std::size_t n_acc = 0, n = 0;
  for (const VideoRecord* v : by_id(task)) {
    std::optional<PrefixCut> cut;
    if (mode == EvalMode::plan_prefix) {
      cut = sample_cut(*v, task.vocab, rng);
    } else if (v->duration() > 0) {
      cut = cut_at(*v, task.vocab, std::min(o.complete_start, v->duration() - 1));
      cut->remainder.insert(cut->remainder.begin(), cut->prefix.begin(), cut->prefix.end());
      cut->prefix.clear();
    }
    if (!cut || cut->remainder.empty()) continue;
    const auto p = m.plan(*v, cut->second, cut->prefix);
    const std::size_t common = std::min(p.size(), cut->remainder.size());
    if (common > 0) {
      acc += accuracy(std::span(p).first(common), std::span(cut->remainder).first(common));
      ++n_acc;
    }
    iou += miou(p, cut->remainder);
    len_err += std::abs(static_cast<double>(p.size()) - static_cast<double>(cut->remainder.size()));
    ++n;
  }
  TaskMetrics out;
  if (n == 0) return out;
  if (n_acc > 0) out["accuracy"] = acc / static_cast<double>(n_acc);
  out["miou"] = iou / static_cast<double>(n);
  out["length_error"] = len_err / static_cast<double>(n);
  return out;
}

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

EvalReport evaluate(const Corpus& split, std::span<const ModelSet> models, std::span<const std::uint64_t> seeds,
                    EvalMode mode, const EvalOptions& options) {
  if (seeds.empty()) throw UsageError("evaluation needs at least one seed");
  if (models.size() != seeds.size()) {
    throw ConfigError("missing bundle for seed " + std::to_string(seeds[std::min(models.size(), seeds.size() - 1)]));
  }
  EvalReport r;
  r.mode = mode;
  r.label = options.label;
  r.seeds.assign(seeds.begin(), seeds.end());
  r.config_hash = options.config_hash;
  r.metrics = metric_names(mode);
  for (const auto& t : split.tasks) r.tasks.push_back(t.vocab.task_id());

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::map<std::string, TaskMetrics> per_task;
    for (const auto& task : split.tasks) {
      const auto it = models[i].find(task.vocab.task_id());
      if (it == models[i].end() || !it->second) {
        throw ConfigError("missing bundle for task '" + task.vocab.task_id() + "' at seed " + std::to_string(seeds[i]));
      }
      const GuidanceModel& m = *it->second;
      switch (mode) {
        case EvalMode::tracking: per_task[task.vocab.task_id()] = eval_tracking(task, m); break;
        case EvalMode::recommendation: per_task[task.vocab.task_id()] = eval_recommendation(task, m); break;
        case EvalMode::plan_complete:
        case EvalMode::plan_prefix: per_task[task.vocab.task_id()] = eval_planning(task, m, mode, options); break;
      }
    }
    r.per_seed.push_back(std::move(per_task));
  }

  for (const std::string& metric : r.metrics) {
    std::vector<double> agg;
    for (const auto& seed_row : r.per_seed) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& [task, vals] : seed_row) {
        if (const auto v = vals.find(metric); v != vals.end()) {
          sum += v->second;
          ++n;
        }
      }
      if (n > 0) agg.push_back(sum / static_cast<double>(n));
    }
    if (!agg.empty()) r.aggregate[metric] = summarize(agg);
    for (const std::string& task : r.tasks) {
      std::vector<double> xs;
      for (const auto& seed_row : r.per_seed) {
        const auto& vals = seed_row.at(task);
        if (const auto v = vals.find(metric); v != vals.end()) xs.push_back(v->second);
      }
      if (!xs.empty()) r.per_task[task][metric] = summarize(xs);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json summary_json(const MetricSummary& s) {
  json j = {{"mean", s.mean}, {"count", s.count}};
  j["std"] = s.std ? json(*s.std) : json(nullptr);
  return j;
}

MetricSummary summary_from(const json& j) {
  MetricSummary s;
  s.mean = j.at("mean").get<double>();
  s.count = j.at("count").get<std::size_t>();
  if (!j.at("std").is_null()) s.std = j.at("std").get<double>();
  return s;
}

std::string metric_label(const std::string& m) {
  if (m == "accuracy") return "Accuracy";
  if (m == "accuracy_excl_null") return "Accuracy excl. null";
  if (m == "loglik_prediction") return "Log-likelihood";
  if (m == "loglik_ground_truth") return "Log-likelihood ground-truth";
  if (m == "loglik_skipped") return "Unscored steps";
  if (m == "miou") return "mIoU";
  if (m == "length_error") return "Length error";
  return m;
}

std::string cell(const MetricSummary* s) {
  if (!s) return "n/a";
  char buf[64];
  if (s->std) {
    std::snprintf(buf, sizeof buf, "%.3f (± %.3f)", s->mean, *s->std);
  } else {
    std::snprintf(buf, sizeof buf, "%.3f", s->mean);
  }
  return buf;
}

const char* title(EvalMode m) {
  switch (m) {
    case EvalMode::tracking: return "Task tracking results";
    case EvalMode::recommendation: return "Next action recommendation results";
    case EvalMode::plan_complete: return "Plan generation results (complete plan)";
    case EvalMode::plan_prefix: return "Plan generation results (after a prefix)";
  }
  return "";
}

const char* row_prefix(EvalMode m) {
  switch (m) {
    case EvalMode::tracking: return "Task tracking: ";
    case EvalMode::recommendation: return "Next action: ";
    case EvalMode::plan_complete: return "Complete plan: ";
    case EvalMode::plan_prefix: return "Planning: ";
  }
  return "";
}

// Visible width of UTF-8 text.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

std::string pad(const std::string& s, std::size_t w) { return s + std::string(w > width(s) ? w - width(s) : 0, ' '); }

std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w;
  for (const auto& row : rows) {
    if (w.size() < row.size()) w.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], width(row[i]));
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "  " : "") + pad(row[i], w[i]);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  json j;
  j["mode"] = to_string(r.mode);
  j["label"] = r.label;
  j["seeds"] = r.seeds;
  j["config_hash"] = r.config_hash;
  j["metrics"] = r.metrics;
  j["tasks"] = r.tasks;
  j["per_seed"] = json::array();
  for (const auto& row : r.per_seed) j["per_seed"].push_back(row);
  j["per_task"] = json::object();
  for (const auto& [task, ms] : r.per_task) {
    for (const auto& [m, s] : ms) j["per_task"][task][m] = summary_json(s);
  }
  j["aggregate"] = json::object();
  for (const auto& [m, s] : r.aggregate) j["aggregate"][m] = summary_json(s);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.mode = eval_mode_from_string(j.at("mode").get<std::string>());
    r.label = j.at("label").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.metrics = j.at("metrics").get<std::vector<std::string>>();
    r.tasks = j.at("tasks").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_seed")) r.per_seed.push_back(row.get<std::map<std::string, TaskMetrics>>());
    for (const auto& [task, ms] : j.at("per_task").items()) {
      for (const auto& [m, s] : ms.items()) r.per_task[task][m] = summary_from(s);
    }
    for (const auto& [m, s] : j.at("aggregate").items()) r.aggregate[m] = summary_from(s);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("evaluation report: ") + e.what());
  }
}

std::string format_report(const EvalReport& r) {
  std::string out = std::string(title(r.mode)) + " (seeds:";
  for (auto s : r.seeds) out += " " + std::to_string(s);
  out += ")\n";
  std::vector<std::vector<std::string>> rows{{"Metrics", r.label}};
  for (const auto& m : r.metrics) {
    const auto it = r.aggregate.find(m);
    rows.push_back({metric_label(m), cell(it == r.aggregate.end() ? nullptr : &it->second)});
  }
  out += table(rows);
  out += "\nPer task\n";
  std::vector<std::vector<std::string>> per{{"Task"}};
  for (const auto& m : r.metrics) per[0].push_back(metric_label(m));
  for (const auto& t : r.tasks) {
    std::vector<std::string> row{t};
    const auto it = r.per_task.find(t);
    for (const auto& m : r.metrics) {
      const MetricSummary* s = nullptr;
      if (it != r.per_task.end()) {
        if (const auto v = it->second.find(m); v != it->second.end()) s = &v->second;
      }
      row.push_back(cell(s));
    }
    per.push_back(std::move(row));
  }
  out += table(per);
  return out;
}

std::string format_columns(std::span<const std::vector<EvalReport>> columns) {
  std::vector<std::vector<std::string>> rows{{"Metrics"}};
  std::vector<std::pair<EvalMode, std::string>> order;
  for (const auto& col : columns) {
    rows[0].push_back(col.empty() ? "" : col.front().label);
    for (const auto& r : col) {
      for (const auto& m : r.metrics) {
        if (std::find(order.begin(), order.end(), std::pair{r.mode, m}) == order.end()) order.emplace_back(r.mode, m);
      }
    }
  }
  for (const auto& [mode, m] : order) {
    std::vector<std::string> row{std::string(row_prefix(mode)) + metric_label(m)};
    for (const auto& col : columns) {
      const MetricSummary* s = nullptr;
      for (const auto& r : col) {
        if (r.mode != mode) continue;
        if (const auto it = r.aggregate.find(m); it != r.aggregate.end()) s = &it->second;
      }
      row.push_back(cell(s));
    }
    rows.push_back(std::move(row));
  }
  return table(rows);
}

}  // namespace adtg
