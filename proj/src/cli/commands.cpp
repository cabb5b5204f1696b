// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "adtg/corpus/corpus.hpp"
#include "adtg/corpus/formats.hpp"
#include "adtg/error.hpp"
#include "adtg/pipeline/bundle_io.hpp"
#include "adtg/pipeline/pipeline.hpp"
#include "json.hpp"

namespace adtg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr TrainStage kStages[] = {TrainStage::embeddings, TrainStage::tracker, TrainStage::recommender};
constexpr EvalMode kModes[] = {EvalMode::tracking, EvalMode::recommendation, EvalMode::plan_complete,
                               EvalMode::plan_prefix};

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create '" + p.string() + "': " + ec.message());
}

fs::path stem_of(const RunConfig& c, std::uint64_t seed, TrainStage s) { return seed_dir(c, seed) / to_string(s); }

/// Loads a prerequisite bundle after checking that it belongs to this config.
template <typename Load>
auto require_stage(const RunConfig& c, std::uint64_t fp, std::uint64_t seed, TrainStage stage, const std::string& who,
                   Load load) {
  const fs::path stem = stem_of(c, seed, stage);
  const std::string name = to_string(stage);
  if (!bundle_exists(stem)) {
    throw ConfigError(who + " needs the " + name + " bundle for seed " + std::to_string(seed) +
                      "; run `train --stage " + name + "` first");
  }
  auto stored = load(stem);
  const StageRecord want{name, seed, stage_hash(c, fp, seed, stage)};
  if (!(stored.record == want)) {
    throw ConfigError("the " + name + " bundle for seed " + std::to_string(seed) +
                      " was trained under a different config or corpus; rerun `train --stage " + name + "`");
  }
  return stored;
}

Stored<EmbeddingBundle> require_embeddings(const RunConfig& c, std::uint64_t fp, std::uint64_t seed,
                                           const std::string& who) {
  return require_stage(c, fp, seed, TrainStage::embeddings, who,
                       [](const fs::path& p) { return load_embedding_bundle(p); });
}

Stored<GuidanceBundle> require_guidance(const RunConfig& c, std::uint64_t fp, std::uint64_t seed, TrainStage stage,
                                        const std::string& who) {
  return require_stage(c, fp, seed, stage, who, [](const fs::path& p) { return load_guidance_bundle(p); });
}

std::string last_loss(const std::vector<double>& losses) {
  if (losses.empty()) return "not trained";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%zu epochs, final loss %.6g", losses.size(), losses.back());
  return buf;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : sep) + x;
  return out;
}

}  // namespace

fs::path seed_dir(const RunConfig& c, std::uint64_t seed) { return fs::path(c.out) / ("seed_" + std::to_string(seed)); }

// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& c, std::ostream& out) {
  const std::vector<SynthTask> tasks = synth_tasks(c);
  const Corpus corpus = corpus_of(tasks);
  const fs::path root(c.corpus);
  save_corpus(corpus, root);
  make_dirs(root / "truth");
  json specs = json::array();
  const std::vector<SynthTaskSpec> used =
      c.synth_tasks.empty() ? synth_preset(c.synth_preset, c.feature_dim, c.synth_seed, c.synth_videos) : c.synth_tasks;
  for (const auto& s : used) specs.push_back(json::parse(synth_spec_to_json(s)));
  for (const SynthTask& t : tasks) {
    const Graph g = build_graph(t.data.vocab, t.sequences);
    write_file(root / "truth" / (t.data.vocab.task_id() + ".json"), graph_to_json(g));
    write_file(root / "truth" / (t.data.vocab.task_id() + ".dot"), to_dot(g));
  }
  json manifest = {{"generator", "synth"},
                   {"preset", c.synth_tasks.empty() ? json(c.synth_preset) : json(nullptr)},
                   {"synth_seed", c.synth_seed},
                   {"videos", corpus.video_count()},
                   {"tasks", specs}};
  write_file(root / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << tasks.size() << " task(s), " << corpus.video_count() << " videos to " << root.string() << "\n";
}

void cmd_ingest_verify(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = load_corpus(c.corpus);
  if (corpus.tasks.empty()) throw DataError("corpus at '" + c.corpus + "' has no tasks");
  for (const TaskData& t : corpus.tasks) {
    for (const VideoRecord& v : t.videos) validate_video(v, t.vocab);
  }
  if (corpus.feature_dim() != c.feature_dim) {
    throw DataError("corpus features have " + std::to_string(corpus.feature_dim()) + " dimensions, config expects " +
                    std::to_string(c.feature_dim));
  }
  split_corpus(corpus, c.split_seed);  // every task needs at least 3 videos
  out << format_stats_table(corpus_stats(corpus));
  out << "ok: " << corpus.tasks.size() << " task(s), " << corpus.video_count() << " videos, feature dim "
      << corpus.feature_dim() << "\n";
}

void cmd_build_graphs(const RunConfig& c, std::ostream& out) {
  const Corpus corpus = load_corpus(c.corpus);
  const CorpusSplits s = split_corpus(corpus, c.split_seed);
  const std::vector<Graph> graphs = build_graphs(s.train);
  const fs::path dir = fs::path(c.out) / "graphs";
  make_dirs(dir);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i];
    const TaskData& task = corpus.tasks[i];
    for (const auto& v : s.train.tasks[i].videos) {
      const auto seq = compressed_sequence(framewise_labels(v, task.vocab));
      if (!seq.empty() && !is_replayable(g, seq)) {
        throw Error("graph for task '" + g.task_id() + "' cannot replay train video '" + v.video_id + "'");
      }
    }
    std::size_t unseen = 0, videos = 0;
    for (const Corpus* held : {&s.val, &s.test}) {
      for (const auto& v : held->tasks[i].videos) {
        const auto n = unseen_edges(g, compressed_sequence(framewise_labels(v, task.vocab))).size();
        unseen += n;
        videos += n > 0;
      }
    }
    write_file(dir / (g.task_id() + ".json"), graph_to_json(g));
    write_file(dir / (g.task_id() + ".dot"), to_dot(g));
    out << g.task_id() << ": " << g.nodes().size() << " nodes, " << g.edge_count() << " edges; " << unseen
        << " unseen val/test transition(s) in " << videos << " video(s)\n";
  }
  out << "wrote " << graphs.size() << " graph(s) to " << dir.string() << "\n";
}

void cmd_train(const RunConfig& c, const std::string& stage, std::ostream& out) {
  std::vector<TrainStage> stages;
  if (stage == "all") {
    stages.assign(std::begin(kStages), std::end(kStages));
  } else {
    stages.push_back(train_stage_from_string(stage));
  }
  const Corpus corpus = load_corpus(c.corpus);
  const CorpusSplits s = split_corpus(corpus, c.split_seed);
  const std::uint64_t fp = corpus_fingerprint(corpus);
  make_dirs(c.out);
  write_file(fs::path(c.out) / "config.json", config_to_json(c));

  for (std::uint64_t seed : c.seeds) {
    const fs::path dir = seed_dir(c, seed);
    make_dirs(dir);
    for (TrainStage st : stages) {
      const std::string name = to_string(st);
      const StageRecord record{name, seed, stage_hash(c, fp, seed, st)};
      const fs::path stem = stem_of(c, seed, st);
      if (stage == "all" && bundle_exists(stem) && read_stage_record(stem) == record) {
        out << "seed " << seed << ": " << name << " up to date\n";
        continue;
      }
      const std::string who = "stage '" + name + "'";
      std::vector<double> losses;
      if (st == TrainStage::embeddings) {
        EmbeddingTrainLog log;
        save_embedding_bundle(stem, embedding_stage(s.train, c, seed, &log), record);
        losses = log.epoch_loss;
      } else if (st == TrainStage::tracker) {
        const auto e = require_embeddings(c, fp, seed, who);
        GuidanceTrainLog log;
        save_guidance_bundle(stem, tracker_stage(s.train, e.bundle, c, seed, &log), record);
        losses = log.tracker_loss;
      } else {
        const auto e = require_embeddings(c, fp, seed, who);
        auto g = require_guidance(c, fp, seed, TrainStage::tracker, who);
        GuidanceTrainLog log;
        recommender_stage(g.bundle, s.train, build_graphs(s.train), e.bundle, c, seed, &log);
        save_guidance_bundle(stem, g.bundle, record);
        losses = log.recommender_loss;
      }
      write_file(dir / (name + "_loss.csv"), loss_csv(losses));
      out << "seed " << seed << ": " << name << " trained (" << last_loss(losses) << ")\n";
    }
  }
}

namespace {

std::vector<ModelSet> load_models(const RunConfig& c, std::uint64_t fp, const Corpus& train, const std::string& who) {
  const std::vector<Graph> graphs = build_graphs(train);
  std::vector<ModelSet> sets;
  for (std::uint64_t seed : c.seeds) {
    const auto e = require_embeddings(c, fp, seed, who);
    auto g = require_guidance(c, fp, seed, TrainStage::recommender, who);
    sets.push_back(model_set(e.bundle, std::make_shared<const GuidanceBundle>(std::move(g.bundle)), graphs, c));
  }
  return sets;
}

}  // namespace

std::vector<EvalReport> cmd_eval(const RunConfig& c, const std::string& mode, std::ostream& out) {
  std::vector<EvalMode> modes;
  if (mode == "all") {
    modes.assign(std::begin(kModes), std::end(kModes));
  } else {
    modes.push_back(eval_mode_from_string(mode));
  }
  const Corpus corpus = load_corpus(c.corpus);
  const CorpusSplits s = split_corpus(corpus, c.split_seed);
  const std::uint64_t fp = corpus_fingerprint(corpus);
  const std::vector<ModelSet> sets = load_models(c, fp, s.train, "eval");

  EvalOptions o;
  o.cut_seed = c.cut_seed;
  o.complete_start = c.complete_start;
  o.label = variant_label(c.variant);
  o.config_hash = config_hash(c, fp);
  const fs::path dir = fs::path(c.out) / "eval";
  make_dirs(dir);
  std::vector<EvalReport> reports;
  for (EvalMode m : modes) {
    EvalReport r = evaluate(s.named(c.eval_split), sets, c.seeds, m, o);
    const std::string text = format_report(r);
    write_file(dir / (std::string(to_string(m)) + ".json"), report_to_json(r));
    write_file(dir / (std::string(to_string(m)) + ".txt"), text);
    out << (reports.empty() ? "" : "\n") << text;
    reports.push_back(std::move(r));
  }
  return reports;
}

void cmd_plan(const RunConfig& c, const std::string& video_id, int prefix_cut, std::ostream& out) {
  const Corpus corpus = load_corpus(c.corpus);
  std::size_t task_index = corpus.tasks.size();
  const VideoRecord* video = nullptr;
  for (std::size_t i = 0; i < corpus.tasks.size() && !video; ++i) {
    for (const auto& v : corpus.tasks[i].videos) {
      if (v.video_id == video_id) {
        video = &v;
        task_index = i;
        break;
      }
    }
  }
  if (!video) throw UsageError("unknown video id '" + video_id + "'");
  const ActionVocabulary& vocab = corpus.tasks[task_index].vocab;
  const PrefixCut cut = cut_at(*video, vocab, prefix_cut);

  const CorpusSplits s = split_corpus(corpus, c.split_seed);
  const std::uint64_t fp = corpus_fingerprint(corpus);
  const std::uint64_t seed = c.seeds.front();
  const auto e = require_embeddings(c, fp, seed, "plan");
  auto g = require_guidance(c, fp, seed, TrainStage::recommender, "plan");
  const Graph graph = build_graphs(s.train)[task_index];
  const TaskModel m = bind_task(std::make_shared<const GuidanceBundle>(std::move(g.bundle)), e.bundle, vocab);
  const numkit::VectorXd x = video->features.row(prefix_cut).cast<double>().transpose();
  const Plan p = plan(m, graph, x, cut.prefix, plan_options(c));

  auto names = [&](const std::vector<ActionId>& ids) {
    std::vector<std::string> out;
    for (ActionId a : ids) out.push_back(vocab.name(a));
    return out;
  };
  std::string text = "Video " + video_id + ", task " + vocab.task_id() + ", seed " + std::to_string(seed) +
                     ", cut at second " + std::to_string(prefix_cut) + "\n";
  text += "Prefix: " + (cut.prefix.empty() ? std::string("(none)") : join(names(cut.prefix), ", ")) + "\n";
  const auto gt = names(cut.remainder), gen = names(p.actions);
  std::size_t w = std::string("Ground truth").size();
  for (const auto& n : gt) w = std::max(w, n.size());
  auto pad = [](std::string s, std::size_t n) { return s + std::string(n > s.size() ? n - s.size() : 0, ' '); };
  text += pad("Step", 6) + pad("Ground truth", w + 2) + "Generated\n";
  for (std::size_t i = 0; i < std::max(gt.size(), gen.size()); ++i) {
    std::string line = pad(std::to_string(i + 1), 6) + pad(i < gt.size() ? gt[i] : "", w + 2) +
                       (i < gen.size() ? gen[i] : "");
    while (!line.empty() && line.back() == ' ') line.pop_back();
    text += line + "\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s (log-probability %.4f)\n",
                p.finished ? "Generated plan ended with EOS" : "Generated plan reached max_plan_len", p.log_prob);
  text += buf;

  const fs::path dir = fs::path(c.out) / "plans";
  make_dirs(dir);
  const std::string base = video_id + "_cut" + std::to_string(prefix_cut);
  write_file(dir / (base + ".txt"), text);
  write_file(dir / (base + ".jsonl"), trace_to_jsonl(p, vocab));
  out << text << "trace: " << (dir / (base + ".jsonl")).string() << "\n";
}

void cmd_stats(const RunConfig& c, std::ostream& out) {
  out << format_stats_table(corpus_stats(load_corpus(c.corpus)));
}

void cmd_ablation(const RunConfig& c, const std::vector<std::string>& variants, const std::vector<std::string>& modes,
                  std::ostream& out) {
  std::vector<Variant> vs;
  for (const auto& v : variants) vs.push_back(variant_from_string(v));
  std::vector<EvalMode> ms;
  for (const auto& m : modes) ms.push_back(eval_mode_from_string(m));
  if (vs.empty()) vs = {Variant::full, Variant::no_history, Variant::random_embed, Variant::onehot_embed};
  if (ms.empty()) ms.assign(std::begin(kModes), std::end(kModes));

  const Corpus corpus = load_corpus(c.corpus);
  std::vector<std::vector<EvalReport>> columns;
  json all = json::array();
  for (Variant v : vs) {
    columns.push_back(run_ablation(v, corpus, c.seeds, c, ms));
    for (const auto& r : columns.back()) all.push_back(json::parse(report_to_json(r)));
  }
  const std::string text = format_columns(columns);
  const fs::path dir = fs::path(c.out) / "eval";
  make_dirs(dir);
  write_file(dir / "ablation.json", all.dump(2) + "\n");
  write_file(dir / "ablation.txt", text);
  out << text;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // --key=value for any config key is an override; the rest goes to CLI11.
  std::set<std::string> keys;
  const json defaults = json::parse(config_to_json(RunConfig{}));
  for (const auto& [k, v] : defaults.items()) keys.insert(k);
  std::vector<std::string> args, overrides;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    const auto eq = a.find('=');
    if (a.rfind("--", 0) == 0 && eq != std::string::npos && keys.count(a.substr(2, eq - 2))) {
      overrides.push_back(a);
    } else {
      args.push_back(a);
    }
  }

  CLI::App app{"Action dynamics task graphs: learn task graphs from demonstrations, then track, recommend and plan.",
               "adtg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Any config key can be overridden as --key=value, e.g. --tracker_epochs=10 --seeds=0,1,2.");
  std::string config_path, out_dir, corpus_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run config");
  auto* seed_opt = app.add_option("--seed", seed, "Run with this single seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--corpus", corpus_dir, "Corpus directory");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string preset;
  synth->add_option("--preset", preset, "One of: " + join(synth_preset_names(), ", "));
  auto* verify = app.add_subcommand("ingest-verify", "Load and validate a corpus, print its statistics");
  auto* graphs = app.add_subcommand("build-graphs", "Build task graphs from the train split");
  auto* train = app.add_subcommand("train", "Train embeddings, tracker and recommender");
  std::string stage = "all";
  train->add_option("--stage", stage, "embeddings, tracker, recommender or all")->capture_default_str();
  auto* eval = app.add_subcommand("eval", "Evaluate trained bundles");
  std::string mode = "all";
  eval->add_option("--mode", mode, "tracking, recommendation, plan_complete, plan_prefix or all")
      ->capture_default_str();
  auto* planc = app.add_subcommand("plan", "Generate a plan for one video");
  std::string video;
  int cut = 0;
  planc->add_option("--video", video, "Video id")->required();
  planc->add_option("--prefix-cut", cut, "0-based second to plan from")->capture_default_str();
  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  auto* ablation = app.add_subcommand("ablation", "Train and evaluate ablation variants side by side");
  std::vector<std::string> variants, modes;
  ablation->add_option("--variants", variants, "Variants (default: all four)")->delimiter(',');
  ablation->add_option("--modes", modes, "Evaluation modes (default: all four)")->delimiter(',');

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : config_from_json(read_file(config_path));
    for (const auto& o : overrides) apply_override(c, o);
    if (*seed_opt) c.seeds = {seed};
    if (!out_dir.empty()) c.out = out_dir;
    if (!corpus_dir.empty()) c.corpus = corpus_dir;
    if (!preset.empty()) {
      c.synth_preset = preset;
      c.synth_tasks.clear();
    }
    c.validate();

    if (*synth) cmd_synth(c, out);
    else if (*verify) cmd_ingest_verify(c, out);
    else if (*graphs) cmd_build_graphs(c, out);
    else if (*train) cmd_train(c, stage, out);
    else if (*eval) cmd_eval(c, mode, out);
    else if (*planc) cmd_plan(c, video, cut, out);
    else if (*stats) cmd_stats(c, out);
    else if (*ablation) cmd_ablation(c, variants, modes, out);
    return 0;
  } catch (const ValidationError& e) {
    err << "adtg: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "adtg: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace adtg
