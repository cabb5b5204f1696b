// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "adtg/error.hpp"
#include "adtg/guidance/guidance.hpp"
#include "json.hpp"

namespace adtg {

namespace {

struct Trajectory {
  std::vector<ActionId> actions;
  double log_prob = 0;
  TrackState state;
  bool finished = false;
  bool capped = false;

  bool live() const { return !finished && !capped; }
};

void check_options(int beam_width, int max_len) {
  if (beam_width < 1) throw UsageError("beam width must be at least 1");
  if (max_len < 1) throw UsageError("max plan length must be at least 1");
}

/// Replays the prefix and localizes on x_init over the graph's action nodes.
Trajectory localize(const TaskModel& m, const Graph& g, const numkit::VectorXd& x_init,
                    std::span<const ActionId> prefix, int max_len, std::vector<PlanTraceStep>& trace) {
  TrackState state = initial_state(m);
  for (ActionId a : prefix) state = advance_history(m, std::move(state), a);
  std::vector<ActionId> cands;
  for (ActionId a : g.nodes()) {
    if (a != m.vocab.eos()) cands.push_back(a);
  }
  if (cands.empty()) throw PlanningError("graph for task '" + g.task_id() + "' has no action nodes");
  StepScores s = track_step(m, state, x_init, cands);
  const ActionId first = s.action;
  trace.push_back({"track", 0, state.history_events, std::move(s)});
  Trajectory t{{first}, 0.0, advance_history(m, std::move(state), first)};
  t.capped = max_len == 1;
  return t;
}

}  // namespace

Plan plan(const TaskModel& m, const Graph& g, const numkit::VectorXd& x_init, std::span<const ActionId> prefix,
          const PlanOptions& options) {
  check_options(options.beam_width, options.max_len);
  const auto k = static_cast<std::size_t>(options.beam_width);
  Plan out;
  std::vector<Trajectory> beam{localize(m, g, x_init, prefix, options.max_len, out.trace)};

  for (int round = 1; std::any_of(beam.begin(), beam.end(), [](const Trajectory& t) { return t.live(); }); ++round) {
    std::vector<Trajectory> pool;
    for (Trajectory& t : beam) {
      if (!t.live()) {
        pool.push_back(std::move(t));
        continue;
      }
      StepScores r = recommend(m, g, t.state);
      for (std::size_t j = 0; j < r.candidates.size(); ++j) {
        const ActionId c = r.candidates[j];
        const double lp = t.log_prob + r.log_probs(static_cast<Eigen::Index>(j));
        if (c == m.vocab.eos()) {
          pool.push_back({t.actions, lp, t.state, true, false});
        } else {
          Trajectory next{t.actions, lp, advance_history(m, t.state, c)};
          next.actions.push_back(c);
          next.capped = static_cast<int>(next.actions.size()) >= options.max_len;
          pool.push_back(std::move(next));
        }
      }
      out.trace.push_back({"recommend", round, t.actions, std::move(r)});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Trajectory& a, const Trajectory& b) { return a.log_prob > b.log_prob; });
    if (pool.size() > k) pool.resize(k);
    beam = std::move(pool);
  }

  auto best = std::find_if(beam.begin(), beam.end(), [](const Trajectory& t) { return t.finished; });
  if (best == beam.end()) best = beam.begin();
  out.actions = std::move(best->actions);
  out.log_prob = best->log_prob;
  out.finished = best->finished;
  return out;
}

Plan greedy_plan(const TaskModel& m, const Graph& g, const numkit::VectorXd& x_init, std::span<const ActionId> prefix,
                 int max_len) {
  check_options(1, max_len);
  Plan out;
  Trajectory t = localize(m, g, x_init, prefix, max_len, out.trace);
  for (int round = 1; t.live(); ++round) {
    StepScores r = recommend(m, g, t.state);
    const ActionId c = r.action;
    for (std::size_t j = 0; j < r.candidates.size(); ++j) {
      if (r.candidates[j] == c) t.log_prob += r.log_probs(static_cast<Eigen::Index>(j));
    }
    out.trace.push_back({"recommend", round, t.actions, std::move(r)});
    if (c == m.vocab.eos()) {
      t.finished = true;
    } else {
      t.state = advance_history(m, std::move(t.state), c);
      t.actions.push_back(c);
      t.capped = static_cast<int>(t.actions.size()) >= max_len;
    }
  }
  out.actions = std::move(t.actions);
  out.log_prob = t.log_prob;
  out.finished = t.finished;
  return out;
}

std::string trace_to_jsonl(const Plan& p, const ActionVocabulary& vocab) {
  using nlohmann::json;
  auto names = [&](const std::vector<ActionId>& ids) {
    json a = json::array();
    for (ActionId id : ids) a.push_back(vocab.name(id));
    return a;
  };
  std::string out;
  for (const PlanTraceStep& s : p.trace) {
    json lp = json::array();
    for (Eigen::Index i = 0; i < s.scores.log_probs.size(); ++i) lp.push_back(s.scores.log_probs(i));
    json line = {{"kind", s.kind},
                 {"round", s.round},
                 {"context", names(s.context)},
                 {"candidates", names(s.scores.candidates)},
                 {"log_probs", lp},
                 {"chosen", vocab.name(s.scores.action)}};
    out += line.dump() + "\n";
  }
  return out;
}

}  // namespace adtg
