// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one line per criterion, "A<k> PASS|FAIL <name> <seconds>
// (limit <s>) <detail>". Exit status 1 when any criterion fails.
//
//   acceptance            all criteria
//   acceptance A3 A8      selected criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adtg/cli/commands.hpp"
#include "adtg/corpus/corpus.hpp"
#include "adtg/corpus/formats.hpp"
#include "adtg/corpus/synth.hpp"
#include "adtg/embedding/embedding.hpp"
#include "adtg/eval/evaluate.hpp"
#include "adtg/eval/metrics.hpp"
#include "adtg/graph/adtg_graph.hpp"
#include "adtg/guidance/guidance.hpp"
#include "adtg/numkit/adam.hpp"
#include "adtg/numkit/allocator.hpp"
#include "adtg/numkit/autodiff.hpp"
#include "adtg/numkit/hash.hpp"
#include "adtg/pipeline/pipeline.hpp"
#include "test_util.hpp"

using namespace adtg;
using numkit::MatrixXd;
using numkit::Var;
using numkit::VectorXd;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

MatrixXd gaussian(numkit::Rng& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

/// Corpus of one split, all tasks of `a` followed by the videos of `b`.
Corpus merged(const Corpus& a, const Corpus& b) {
  Corpus out = a;
  for (std::size_t i = 0; i < out.tasks.size(); ++i) {
    for (const auto& v : b.tasks[i].videos) out.tasks[i].videos.push_back(v);
  }
  return out;
}

/// Synthetic corpora for the learned criteria use 64-dimensional features;
/// every other setting is the RunConfig default.
RunConfig default_config() {
  RunConfig c;
  c.feature_dim = 64;
  return c;
}

Corpus preset_corpus(const std::string& name, const RunConfig& c) {
  std::vector<SynthTask> tasks;
  for (const auto& spec : synth_preset(name, c.feature_dim, 0)) tasks.push_back(synth_generate(spec));
  return corpus_of(tasks);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// A1

Outcome graph_recovery() {
  const std::vector<SynthTaskSpec> specs = synth_preset("dag8", 16, 0);
  const SynthTask task = synth_generate(specs.front());
  const ActionVocabulary& vocab = task.data.vocab;
  std::vector<std::vector<ActionId>> seqs;
  for (const auto& v : task.data.videos) seqs.push_back(compressed_sequence(framewise_labels(v, vocab)));
  const Graph g = build_graph(vocab, seqs);

  std::set<std::pair<ActionId, ActionId>> built;
  for (const auto& [e, n] : g.edge_counts()) built.insert(e);
  if (built != task.successor_edges) {
    return {false, std::to_string(built.size()) + " edges built, oracle has " +
                       std::to_string(task.successor_edges.size())};
  }

  // Pairs seen in both relative orders must be exactly the interchangeable
  // ones, and both must be incomparable in the generating DAG.
  const int n = static_cast<int>(vocab.size());
  const auto reach = precedence_closure(n, specs.front().partial_order);
  std::set<std::pair<int, int>> before;
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) before.insert({s[i].value - 1, s[j].value - 1});
    }
  }
  int both = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!before.count({a, b}) || !before.count({b, a})) continue;
      ++both;
      const bool comparable = reach[a][b] || reach[b][a];
      const bool inter = is_interchangeable(g, ActionId{static_cast<std::uint32_t>(a + 1)},
                                            ActionId{static_cast<std::uint32_t>(b + 1)});
      if (inter == comparable) {
        return {false, "pair (" + vocab.name(ActionId{static_cast<std::uint32_t>(a + 1)}) + ", " +
                           vocab.name(ActionId{static_cast<std::uint32_t>(b + 1)}) + ") disagrees"};
      }
    }
  }
  if (both == 0) return {false, "no pair observed in both orders"};
  return {true, std::to_string(built.size()) + " edges equal the oracle; " + std::to_string(both) +
                    " two-order pair(s) agree"};
}

// ---------------------------------------------------------------------------
// A2

Outcome gradient_integrity() {
  constexpr int kTrials = 10;
  constexpr double kEps = 1e-6;
  numkit::Rng rng(2);
  const std::vector<ActionVocabulary> vocabs{ActionVocabulary("t1", {"a", "b", "c", "d"}),
                                             ActionVocabulary("t2", {"e", "f"})};
  EmbeddingConfig ec;
  ec.condition_dim = 8;
  ec.embedding_dim = 6;
  ec.hidden_dim = 10;
  GuidanceConfig gc;
  gc.rnn_hidden = 8;
  gc.scorer_hidden = 12;
  const int D = 8;

  double worst_embed = 0, worst_track = 0, worst_rec = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const EmbeddingBundle e = init_embeddings(vocabs, D, ec, rng);

    // Embedding loss: disc + hinge over the other actions of the task.
    const VectorXd pre = gaussian(rng, 2 * D, 1), post = gaussian(rng, 2 * D, 1);
    const double margin = trial % 2 ? 0.5 : 1.5;  // some hinges active, some not
    const std::vector<int> neg{0, 1, 3};
    const std::vector<MatrixXd> ep{e.cond_gen.w1,  e.cond_gen.b1,  e.cond_gen.w2,  e.cond_gen.b2, e.predictor.w1,
                                   e.predictor.b1, e.predictor.w2, e.predictor.b2, e.table};
    const numkit::LossFn<double> fe = [&](numkit::Tape&, std::span<const Var> v) {
      const EmbeddingVars ev{{v[0], v[1], v[2], v[3], e.cond_gen.activation},
                             {v[4], v[5], v[6], v[7], e.predictor.activation},
                             v[8]};
      return segment_loss(ev, pre, post, 2, neg, margin);
    };
    worst_embed = std::max(worst_embed, numkit::finite_diff_check<double>(fe, ep, kEps));

    // Tracking and recommendation through a five-step history.
    const GuidanceBundle gb = init_guidance(e, gc, rng);
    const TaskModel m = bind_task(std::make_shared<const GuidanceBundle>(gb), e, vocabs[0]);
    std::uniform_int_distribution<std::uint32_t> act(1, 4);
    std::vector<ActionId> events;
    for (int i = 0; i < 5; ++i) events.push_back(ActionId{act(rng)});
    const MatrixXd x = gaussian(rng, D, 4);
    const std::vector<ActionId> labels{ActionId{0}, ActionId{act(rng)}, ActionId{act(rng)}, ActionId{0}};
    const std::vector<ActionId> cands{ActionId{1}, ActionId{3}, ActionId{4}, vocabs[0].eos()};
    const ActionId next = cands[static_cast<std::size_t>(trial) % cands.size()];
    const auto& h = gb.history_rnn;
    for (const bool track : {true, false}) {
      const auto& sc = track ? gb.track_scorer : gb.rec_scorer;
      const std::vector<MatrixXd> gp{h.w_in, h.w_h, h.b, sc.w1, sc.b1, sc.w2, sc.b2, m.table};
      const numkit::LossFn<double> f = [&](numkit::Tape&, std::span<const Var> v) {
        const numkit::RnnVars<double> rnn{v[0], v[1], v[2]};
        const numkit::Mlp2Vars<double> scorer{v[3], v[4], v[5], v[6], sc.activation};
        return track ? track_loss(&rnn, scorer, v[7], events, x, labels, gc.rnn_hidden)
                     : recommend_loss(&rnn, scorer, v[7], events, cands, next, gc.rnn_hidden);
      };
      double& worst = track ? worst_track : worst_rec;
      worst = std::max(worst, numkit::finite_diff_check<double>(f, gp, kEps));
    }
  }
  const double worst = std::max({worst_embed, worst_track, worst_rec});
  return {worst < 1e-4, "max relative error: embedding " + fmt("%.1e", worst_embed) + ", tracking " +
                            fmt("%.1e", worst_track) + ", recommendation " + fmt("%.1e", worst_rec) + " over " +
                            std::to_string(kTrials) + " instances each"};
}

// ---------------------------------------------------------------------------
// A3

Outcome optimizer_oracle() {
  numkit::Rng rng(3);
  const MatrixXd target = gaussian(rng, 8, 1);
  MatrixXd w = MatrixXd::Zero(8, 1);
  const std::vector<numkit::ParamRef<double>> refs{numkit::ParamRef<double>::of("w", w)};
  numkit::AdamState<double> adam;
  for (int step = 1; step <= 5000; ++step) {
    const std::vector<MatrixXd> grad{2.0 * (w - target)};
    numkit::adam_step<double>(adam, refs, grad, 0.1);
    if ((w - target).norm() < 1e-3) return {true, "converged after " + std::to_string(step) + " steps"};
  }
  return {false, "distance after 5000 steps " + fmt("%.3g", (w - target).norm())};
}

// ---------------------------------------------------------------------------
// A4 and A5 share one training run.

struct Separable {
  RunConfig config = default_config();
  Corpus corpus;
  CorpusSplits splits;
  Corpus held_out;
  TrainedRun run;
  double train_seconds = 0;
};

const Separable& separable() {
  static const Separable s = [] {
    Separable s;
    const auto t0 = std::chrono::steady_clock::now();
    s.corpus = preset_corpus("separable6", s.config);
    s.splits = split_corpus(s.corpus, s.config.split_seed);
    s.held_out = merged(s.splits.val, s.splits.test);
    s.run = train_all(s.splits.train, s.config, 0);
    s.train_seconds = seconds_since(t0);
    return s;
  }();
  return s;
}

Outcome embedding_separation() {
  const Separable& s = separable();
  const TaskData& task = s.held_out.tasks.front();
  const auto rows = s.run.embeddings.task_rows(task.vocab);
  int hits = 0, total = 0;
  for (const auto& v : task.videos) {
    for (const auto& seg : v.segments) {
      const ConditionWindows w = condition_windows(v, seg);
      const VectorXd d = candidate_distances(s.run.embeddings, w.pre, w.post, rows);
      const double own = d(static_cast<Eigen::Index>(seg.action.value - 1));
      hits += own <= d.minCoeff();
      ++total;
    }
  }
  const double rate = static_cast<double>(hits) / total;
  return {rate >= 0.95, std::to_string(hits) + "/" + std::to_string(total) + " held-out segments (" +
                            fmt("%.3f", rate) + ") rank the true action first; training " +
                            fmt("%.1f", s.train_seconds) + " s included"};
}

Outcome tracking() {
  const Separable& s = separable();
  const std::vector<ModelSet> models{model_set(s.run, s.config)};
  const std::vector<std::uint64_t> seeds{0};
  const EvalReport r = evaluate(s.held_out, models, seeds, EvalMode::tracking);
  const double acc = r.aggregate.at("accuracy").mean, excl = r.aggregate.at("accuracy_excl_null").mean;
  return {acc >= 0.90 && excl >= 0.90, "held-out accuracy " + fmt("%.3f", acc) + ", excluding NULL " +
                                           fmt("%.3f", excl) + "; training " + fmt("%.1f", s.train_seconds) +
                                           " s included"};
}

// ---------------------------------------------------------------------------
// A6

Outcome history_ablation() {
  const RunConfig c = default_config();
  const Corpus corpus = preset_corpus("ambiguous", c);
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const std::vector<EvalMode> modes{EvalMode::tracking, EvalMode::recommendation, EvalMode::plan_prefix};
  const auto full = run_ablation(Variant::full, corpus, seeds, c, modes);
  const auto flat = run_ablation(Variant::no_history, corpus, seeds, c, modes);
  struct Check {
    std::size_t report;
    const char* metric;
    const char* name;
  };
  const Check checks[] = {{0, "accuracy_excl_null", "tracking excl. NULL"},
                          {1, "accuracy", "next action"},
                          {2, "accuracy", "planning accuracy"},
                          {2, "miou", "planning mIoU"}};
  bool ok = true;
  std::string detail;
  for (const Check& k : checks) {
    const double a = full[k.report].aggregate.at(k.metric).mean, b = flat[k.report].aggregate.at(k.metric).mean;
    ok = ok && a - b >= 0.10;
    if (!detail.empty()) detail += "; ";
    detail += std::string(k.name) + " " + fmt("%.3f", a) + " vs " + fmt("%.3f", b);
  }
  return {ok, detail + " (3 seeds, full vs no_history)"};
}

// ---------------------------------------------------------------------------
// A7

Outcome planning_properties() {
  const RunConfig c = default_config();
  const Corpus corpus = preset_corpus("suite", c);
  const CorpusSplits splits = split_corpus(corpus, c.split_seed);
  const TrainedRun run = train_all(splits.train, c, 0);
  const ModelSet models = model_set(run, c);
  const Corpus& test = splits.test;

  // Beam width 1 against the greedy rollout on seeded (video, cut) cases.
  numkit::Rng rng(7);
  int cases = 0, equal = 0;
  while (cases < 100) {
    const TaskData& task = test.tasks[static_cast<std::size_t>(cases) % test.tasks.size()];
    std::uniform_int_distribution<std::size_t> pick(0, task.videos.size() - 1);
    const VideoRecord& v = task.videos[pick(rng)];
    const auto cut = sample_cut(v, task.vocab, rng);
    if (!cut) continue;
    const auto& m = dynamic_cast<const AdtgModel&>(*models.at(task.vocab.task_id()));
    const VectorXd x = v.features.row(cut->second).cast<double>().transpose();
    const Plan beam = plan(m.model(), m.graph(), x, cut->prefix, {1, c.max_plan_len});
    const Plan greedy = greedy_plan(m.model(), m.graph(), x, cut->prefix, c.max_plan_len);
    equal += beam.actions == greedy.actions && beam.log_prob == greedy.log_prob && beam.finished == greedy.finished;
    ++cases;
  }

  // Every plan of both evaluation modes is a graph path ending at EOS or max_len.
  int plans = 0, paths = 0;
  numkit::Rng cut_rng(c.cut_seed);
  for (const auto& task : test.tasks) {
    const auto& m = dynamic_cast<const AdtgModel&>(*models.at(task.vocab.task_id()));
    for (const auto& v : task.videos) {
      std::vector<std::pair<int, std::vector<ActionId>>> starts{{c.complete_start, {}}};
      if (const auto cut = sample_cut(v, task.vocab, cut_rng)) starts.push_back({cut->second, cut->prefix});
      for (const auto& [t, prefix] : starts) {
        const VectorXd x = v.features.row(t).cast<double>().transpose();
        const Plan p = plan(m.model(), m.graph(), x, prefix, plan_options(c));
        bool ok = !p.actions.empty();
        for (std::size_t i = 0; ok && i + 1 < p.actions.size(); ++i) ok = m.graph().has_edge(p.actions[i], p.actions[i + 1]);
        if (ok && p.finished) ok = m.graph().has_edge(p.actions.back(), task.vocab.eos());
        if (ok && !p.finished) ok = static_cast<int>(p.actions.size()) == c.max_plan_len;
        paths += ok;
        ++plans;
      }
    }
  }

  const std::vector<ModelSet> sets{models};
  const std::vector<std::uint64_t> seeds{0};
  EvalOptions opt;
  opt.cut_seed = c.cut_seed;
  opt.complete_start = c.complete_start;
  const double complete = evaluate(test, sets, seeds, EvalMode::plan_complete, opt).aggregate.at("miou").mean;
  const double prefix = evaluate(test, sets, seeds, EvalMode::plan_prefix, opt).aggregate.at("miou").mean;

  return {equal == cases && paths == plans && prefix > complete,
          "beam 1 = greedy on " + std::to_string(equal) + "/" + std::to_string(cases) + " cases; " +
              std::to_string(paths) + "/" + std::to_string(plans) + " plans are graph paths; mIoU prefix " +
              fmt("%.3f", prefix) + " vs complete " + fmt("%.3f", complete)};
}

// ---------------------------------------------------------------------------
// A8

Outcome metric_oracles() {
  numkit::Rng rng(8);
  std::uniform_int_distribution<int> len(1, 30), label(0, 6);
  std::normal_distribution<double> nd(0.0, 3.0);
  auto draw = [&](int n) {
    std::vector<ActionId> v(static_cast<std::size_t>(n));
    for (auto& a : v) a = ActionId{static_cast<std::uint32_t>(label(rng))};
    return v;
  };
  int mismatches = 0;

  for (int i = 0; i < 1000; ++i) {
    const int n = len(rng);
    const auto p = draw(n), g = draw(n);
    int hit = 0, hit_nn = 0, nn = 0;
    for (int k = 0; k < n; ++k) {
      hit += p[k] == g[k];
      if (g[k].value != 0) {
        ++nn;
        hit_nn += p[k] == g[k];
      }
    }
    mismatches += accuracy(p, g) != static_cast<double>(hit) / n;
    const auto ex = accuracy_excl_null(p, g);
    mismatches += nn == 0 ? ex.has_value() : (!ex || *ex != static_cast<double>(hit_nn) / nn);
  }

  for (int i = 0; i < 1000; ++i) {
    const auto p = draw(len(rng) - 1), g = draw(len(rng) - 1);
    // Counting over the label alphabet rather than with set operations.
    int inter = 0, uni = 0;
    for (std::uint32_t a = 0; a <= 6; ++a) {
      const bool in_p = std::count(p.begin(), p.end(), ActionId{a}) > 0;
      const bool in_g = std::count(g.begin(), g.end(), ActionId{a}) > 0;
      inter += in_p && in_g;
      uni += in_p || in_g;
    }
    const double expect = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    mismatches += miou(p, g) != expect;
  }
  const std::vector<ActionId> abc{ActionId{1}, ActionId{2}, ActionId{3}}, bcd{ActionId{2}, ActionId{3}, ActionId{4}};
  const bool fixed = miou(abc, bcd) == 0.5;

  for (int i = 0; i < 1000; ++i) {
    const int n = len(rng);
    std::vector<StepScores> steps;
    std::vector<ActionId> gt;
    double pred_sum = 0, gt_sum = 0;
    int scored = 0;
    for (int k = 0; k < n; ++k) {
      StepScores s;
      const int m = 1 + label(rng) % 5;
      std::vector<double> z;
      for (int j = 0; j < m; ++j) {
        s.candidates.push_back(ActionId{static_cast<std::uint32_t>(j + 1)});
        z.push_back(nd(rng));
      }
      double lse = 0;
      const double mx = *std::max_element(z.begin(), z.end());
      for (double v : z) lse += std::exp(v - mx);
      s.log_probs.resize(m);
      for (int j = 0; j < m; ++j) s.log_probs(j) = z[static_cast<std::size_t>(j)] - mx - std::log(lse);
      const int best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
      s.action = s.candidates[static_cast<std::size_t>(best)];
      const ActionId g{static_cast<std::uint32_t>(label(rng))};  // may fall outside the candidates
      if (g.value >= 1 && static_cast<int>(g.value) <= m) {
        pred_sum += s.log_probs(best);
        gt_sum += s.log_probs(static_cast<Eigen::Index>(g.value - 1));
        ++scored;
      }
      steps.push_back(std::move(s));
      gt.push_back(g);
    }
    if (scored == 0) {
      bool threw = false;
      try {
        loglik_pair(steps, gt);
      } catch (const UsageError&) {
        threw = true;
      }
      mismatches += !threw;
      continue;
    }
    const LogLikPair r = loglik_pair(steps, gt);
    mismatches += std::abs(r.prediction - pred_sum / scored) > 1e-12 || std::abs(r.ground_truth - gt_sum / scored) > 1e-12 ||
                  r.scored != static_cast<std::size_t>(scored) || r.skipped != static_cast<std::size_t>(n - scored);
  }
  return {mismatches == 0 && fixed, std::to_string(mismatches) + " mismatches over 4 x 1000 instances; " +
                                        "{a,b,c} vs {b,c,d} gives " + fmt("%.3f", miou(abc, bcd))};
}

// ---------------------------------------------------------------------------
// A9

int cli(const std::vector<std::string>& args, std::ostream& out) {
  std::vector<const char*> argv{"adtg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, out);
}

Outcome determinism() {
  testutil::TempDir dir;
  std::map<std::string, std::uint64_t> hashes[2];
  std::ostringstream log;
  for (int round = 0; round < 2; ++round) {
    const std::filesystem::path root = dir.path() / ("round" + std::to_string(round));
    const std::vector<std::string> common{"--corpus", (root / "corpus").string(), "--out", (root / "run").string(),
                                          "--seed",   "0",  "--feature_dim=64",   "--synth_preset=chain"};
    for (const std::vector<std::string> cmd : {std::vector<std::string>{"synth"}, {"train"}, {"eval"}}) {
      std::vector<std::string> args = common;
      args.insert(args.end(), cmd.begin(), cmd.end());
      if (cli(args, log) != 0) return {false, "round " + std::to_string(round) + ": " + log.str()};
    }
    for (const auto& e : std::filesystem::recursive_directory_iterator(root / "run")) {
      const auto rel = std::filesystem::relative(e.path(), root / "run").string();
      if (!e.is_regular_file() || rel == "config.json") continue;  // holds the output path
      hashes[round][rel] = numkit::fnv1a(read_file(e.path()));
    }
  }
  int bundles = 0, reports = 0;
  for (const auto& [rel, h] : hashes[0]) {
    bundles += rel.ends_with(".bin");
    reports += rel.starts_with("eval/") && rel.ends_with(".json");
  }
  const bool same = hashes[0] == hashes[1];
  return {same && bundles == 3 && reports == 4,
          std::to_string(hashes[0].size()) + " files (" + std::to_string(bundles) + " bundle blobs, " +
              std::to_string(reports) + " reports) " + (same ? "identical" : "differ") + " across two runs"};
}

struct Criterion {
  const char* id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  numkit::tune_allocator();
  const std::vector<Criterion> all{
      {"A1", "graph recovery", 5, graph_recovery},
      {"A2", "gradient integrity", 30, gradient_integrity},
      {"A3", "optimizer oracle", 1, optimizer_oracle},
      {"A4", "embedding separation", 180, embedding_separation},
      {"A5", "tracking", 300, tracking},
      {"A6", "history ablation", 600, history_ablation},
      {"A7", "planning properties", 120, planning_properties},
      {"A8", "metric oracles", 5, metric_oracles},
      {"A9", "determinism", 600, determinism},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = seconds_since(t0);
    // A4 and A5 share one training run; both are charged for it.
    if (std::string(c.id) == "A5" && (only.empty() || only.count("A4"))) secs += separable().train_seconds;
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.ok && in_time;
    failed += !pass;
    std::printf("%s %s %-22s %7.2f s (limit %g s%s) %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, in_time ? "" : ", exceeded", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
