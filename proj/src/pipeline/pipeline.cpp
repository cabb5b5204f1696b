// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/pipeline/pipeline.hpp"

#include <bit>
#include <cstdio>
#include <set>

#include "adtg/corpus/corpus.hpp"
#include "adtg/error.hpp"
#include "adtg/numkit/hash.hpp"
#include "json.hpp"

namespace adtg {

using nlohmann::json;

const char* to_string(TrainStage s) {
  switch (s) {
    case TrainStage::embeddings: return "embeddings";
    case TrainStage::guidance_init: return "guidance_init";
    case TrainStage::tracker: return "tracker";
    case TrainStage::recommender: return "recommender";
  }
  return "?";
}

TrainStage train_stage_from_string(const std::string& s) {
  for (TrainStage t : {TrainStage::embeddings, TrainStage::tracker, TrainStage::recommender}) {
    if (s == to_string(t)) return t;
  }
  throw UsageError("unknown stage '" + s + "' (expected embeddings, tracker, recommender or all)");
}

std::uint64_t stage_seed(std::uint64_t root, TrainStage stage) {
  return numkit::derive_seed(root, static_cast<std::uint64_t>(stage));
}

std::string variant_label(Variant v) {
  return v == Variant::full ? std::string("ADTG") : "ADTG " + std::string(to_string(v));
}

// ---------------------------------------------------------------------------
// Splits and hashes

const Corpus& CorpusSplits::named(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw UsageError("unknown split '" + name + "' (expected train, val or test)");
}

CorpusSplits split_corpus(const Corpus& corpus, std::uint64_t split_seed) {
  CorpusSplits out;
  for (const TaskData& task : corpus.tasks) {
    std::vector<std::string> ids;
    for (const auto& v : task.videos) ids.push_back(v.video_id);
    Split s;
    try {
      s = split_dataset(ids, split_seed);
    } catch (const DataError& e) {
      throw DataError("task '" + task.vocab.task_id() + "': " + e.what());
    }
    auto take = [&](const std::vector<std::string>& wanted) {
      const std::set<std::string> keep(wanted.begin(), wanted.end());
      TaskData t{task.vocab, {}};
      for (const auto& v : task.videos) {
        if (keep.count(v.video_id)) t.videos.push_back(v);
      }
      return t;
    };
    out.train.tasks.push_back(take(s.train));
    out.val.tasks.push_back(take(s.val));
    out.test.tasks.push_back(take(s.test));
  }
  return out;
}

std::uint64_t corpus_fingerprint(const Corpus& c) {
  numkit::Fnv1a h;
  h.u64(c.tasks.size());
  for (const TaskData& t : c.tasks) {
    h.text(t.vocab.task_id());
    h.u64(t.vocab.size());
    for (const auto& n : t.vocab.names()) h.text(n);
    h.u64(t.videos.size());
    for (const VideoRecord& v : t.videos) {
      h.text(v.video_id);
      h.u64(static_cast<std::uint64_t>(v.duration()));
      h.u64(static_cast<std::uint64_t>(v.feature_dim()));
      h.u64(v.segments.size());
      for (const Segment& s : v.segments) {
        h.u64(s.action.value);
        h.u64(std::bit_cast<std::uint64_t>(s.t_start));
        h.u64(std::bit_cast<std::uint64_t>(s.t_end));
      }
    }
  }
  return h.value();
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hash_of(const json& j) { return hex(numkit::fnv1a(j.dump())); }

const char* embedding_kind(Variant v) {
  switch (v) {
    case Variant::random_embed: return "random";
    case Variant::onehot_embed: return "onehot";
    default: return "trained";
  }
}

void check_feature_dim(const Corpus& train, const RunConfig& c) {
  const int d = train.feature_dim();
  if (d != c.feature_dim) {
    throw ConfigError("corpus features have " + std::to_string(d) + " dimensions but feature_dim is " +
                      std::to_string(c.feature_dim));
  }
}

}  // namespace

std::string stage_hash(const RunConfig& c, std::uint64_t corpus_fp, std::uint64_t seed, TrainStage stage) {
  json emb = {{"corpus", hex(corpus_fp)},
              {"split_seed", c.split_seed},
              {"seed", seed},
              {"feature_dim", c.feature_dim},
              {"condition_dim", c.condition_dim},
              {"embedding_dim", c.embedding_dim},
              {"hidden_dim", c.hidden_dim},
              {"margin", c.margin},
              {"embedding_lr", c.embedding_lr},
              {"embedding_epochs", c.embedding_epochs},
              {"cross_task_negatives", c.cross_task_negatives},
              {"embedding_kind", embedding_kind(c.variant)}};
  if (stage == TrainStage::embeddings) return hash_of(emb);
  json tracker = {{"embeddings", hash_of(emb)},
                  {"guidance_lr", c.guidance_lr},
                  {"tracker_epochs", c.tracker_epochs},
                  {"history_mode", to_string(c.history_mode)},
                  {"use_history", c.variant != Variant::no_history}};
  if (stage == TrainStage::tracker || stage == TrainStage::guidance_init) return hash_of(tracker);
  json rec = {{"tracker", hash_of(tracker)}, {"recommender_epochs", c.recommender_epochs}, {"joint_rnn", c.joint_rnn}};
  return hash_of(rec);
}

std::string config_hash(const RunConfig& c, std::uint64_t corpus_fp) {
  json j = json::parse(config_to_json(c));
  for (const char* k : {"corpus", "out", "seeds", "synth_preset", "synth_seed", "synth_videos", "synth_tasks"}) j.erase(k);
  j["corpus_fingerprint"] = hex(corpus_fp);
  return hash_of(j);
}

// ---------------------------------------------------------------------------
// Stages

std::vector<Graph> build_graphs(const Corpus& train) {
  std::vector<Graph> out;
  for (const TaskData& task : train.tasks) {
    std::vector<std::vector<ActionId>> seqs;
    for (const auto& v : task.videos) seqs.push_back(compressed_sequence(framewise_labels(v, task.vocab)));
    out.push_back(build_graph(task.vocab, seqs));
  }
  return out;
}

EmbeddingBundle embedding_stage(const Corpus& train, const RunConfig& c, std::uint64_t seed, EmbeddingTrainLog* log) {
  check_feature_dim(train, c);
  const EmbeddingConfig ec = embedding_config(c);
  const std::uint64_t s = stage_seed(seed, TrainStage::embeddings);
  std::vector<ActionVocabulary> vocabs;
  for (const auto& t : train.tasks) vocabs.push_back(t.vocab);
  numkit::Rng rng(s);
  switch (c.variant) {
    case Variant::random_embed: return init_embeddings(vocabs, c.feature_dim, ec, rng);
    case Variant::onehot_embed: return onehot_embeddings(vocabs, c.feature_dim, ec, rng);
    default: return train_embeddings(train, ec, s, log);
  }
}

GuidanceBundle tracker_stage(const Corpus& train, const EmbeddingBundle& embeddings, const RunConfig& c,
                             std::uint64_t seed, GuidanceTrainLog* log) {
  check_feature_dim(train, c);
  const GuidanceConfig gc = guidance_config(c);
  numkit::Rng rng(stage_seed(seed, TrainStage::guidance_init));
  GuidanceBundle g = init_guidance(embeddings, gc, rng);
  train_tracker(g, train, embeddings, gc, stage_seed(seed, TrainStage::tracker), log);
  return g;
}

void recommender_stage(GuidanceBundle& guidance, const Corpus& train, std::span<const Graph> graphs,
                       const EmbeddingBundle& embeddings, const RunConfig& c, std::uint64_t seed,
                       GuidanceTrainLog* log) {
  train_recommender(guidance, train, graphs, embeddings, guidance_config(c), stage_seed(seed, TrainStage::recommender),
                    log);
}

TrainedRun train_all(const Corpus& train, const RunConfig& c, std::uint64_t seed) {
  TrainedRun r;
  r.seed = seed;
  r.graphs = build_graphs(train);
  r.embeddings = embedding_stage(train, c, seed, &r.embedding_log);
  GuidanceBundle g = tracker_stage(train, r.embeddings, c, seed, &r.guidance_log);
  recommender_stage(g, train, r.graphs, r.embeddings, c, seed, &r.guidance_log);
  r.guidance = std::make_shared<const GuidanceBundle>(std::move(g));
  return r;
}

ModelSet model_set(const EmbeddingBundle& embeddings, std::shared_ptr<const GuidanceBundle> guidance,
                   std::span<const Graph> graphs, const RunConfig& c) {
  ModelSet out;
  for (const Graph& g : graphs) {
    out[g.task_id()] = std::make_shared<AdtgModel>(bind_task(guidance, embeddings, g.vocab()), g, plan_options(c));
  }
  return out;
}

ModelSet model_set(const TrainedRun& run, const RunConfig& c) {
  return model_set(run.embeddings, run.guidance, run.graphs, c);
}

std::vector<EvalReport> run_ablation(Variant variant, const Corpus& corpus, std::span<const std::uint64_t> seeds,
                                     const RunConfig& c, std::span<const EvalMode> modes) {
  RunConfig vc = c;
  vc.variant = variant;
  vc.validate();
  const CorpusSplits splits = split_corpus(corpus, vc.split_seed);
  std::vector<ModelSet> sets;
  for (std::uint64_t s : seeds) sets.push_back(model_set(train_all(splits.train, vc, s), vc));
  EvalOptions o;
  o.cut_seed = vc.cut_seed;
  o.complete_start = vc.complete_start;
  o.label = variant_label(variant);
  o.config_hash = config_hash(vc, corpus_fingerprint(corpus));
  std::vector<EvalReport> out;
  for (EvalMode m : modes) out.push_back(evaluate(splits.named(vc.eval_split), sets, seeds, m, o));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

namespace {

using Order = std::vector<std::pair<int, int>>;

SynthTaskSpec base_spec(std::string id, int n, Order order, int feature_dim, int videos) {
  SynthTaskSpec s;
  s.task_id = std::move(id);
  s.n_actions = n;
  s.partial_order = std::move(order);
  s.feature_dim = feature_dim;
  s.n_videos = videos;
  return s;
}

Order chain(int n) {
  Order o;
  for (int i = 0; i + 1 < n; ++i) o.push_back({i, i + 1});
  return o;
}

// 0 -> {1, 2} -> 3 -> {4, 5}
const Order kDiamonds{{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}};

struct RealTask {
  const char* id;
  int actions;
  int videos;
};

// Action-space sizes and video counts of the 18 primary tasks.
constexpr RealTask kPrimary18[] = {
    {"make_jello_shots", 6, 182},        {"build_simple_floating_shelves", 5, 153}, {"make_taco_salad", 8, 170},
    {"grill_steak", 11, 228},            {"make_kimchi_fried_rice", 6, 120},        {"make_meringue", 6, 154},
    {"make_a_latte", 6, 157},            {"make_bread_and_butter_pickles", 11, 106}, {"make_lemonade", 8, 131},
    {"make_french_toast", 10, 252},      {"jack_up_a_car", 3, 89},                  {"make_kerala_fish_curry", 7, 149},
    {"make_banana_ice_cream", 5, 170},   {"add_oil_to_your_car", 8, 137},           {"change_a_tire", 11, 99},
    {"make_irish_coffee", 5, 185},       {"make_french_strawberry_cake", 9, 86},    {"make_pancakes", 8, 182},
};

}  // namespace

std::vector<std::string> synth_preset_names() {
  return {"chain", "dag8", "separable6", "ambiguous", "suite", "primary18"};
}

std::vector<SynthTaskSpec> synth_preset(const std::string& name, int feature_dim, std::uint64_t seed, int videos) {
  auto n = [&](int preset_default) { return videos > 0 ? videos : preset_default; };
  std::vector<SynthTaskSpec> out;
  if (name == "chain") {
    out.push_back(base_spec("chain", 5, chain(5), feature_dim, n(30)));
  } else if (name == "dag8") {
    out.push_back(base_spec("dag8", 8, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}, {4, 6}, {5, 6}, {6, 7}},
                            feature_dim, n(50)));
  } else if (name == "separable6") {
    out.push_back(base_spec("separable6", 6, kDiamonds, feature_dim, n(60)));
  } else if (name == "ambiguous") {
    // a0 and a3 share every cluster; only the history tells them apart.
    SynthTaskSpec s = base_spec("ambiguous", 6, kDiamonds, feature_dim, n(60));
    s.shared_clusters = {{0, 3}};
    out.push_back(std::move(s));
  } else if (name == "suite") {
    out.push_back(base_spec("suite_chain", 5, chain(5), feature_dim, n(40)));
    out.push_back(base_spec("suite_diamonds", 6, kDiamonds, feature_dim, n(40)));
    SynthTaskSpec opt = base_spec("suite_optional", 6, chain(6), feature_dim, n(40));
    opt.skip_probability = {0, 0.3, 0, 0.3, 0, 0.3};
    out.push_back(std::move(opt));
    out.push_back(base_spec("suite_wide", 5, {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}}, feature_dim, n(40)));
  } else if (name == "primary18") {
    for (const RealTask& t : kPrimary18) {
      // Mostly sequential with a few interchangeable neighbours.
      Order o;
      for (int i = 0; i + 1 < t.actions; ++i) {
        if (i % 3 == 1 && i + 2 < t.actions) {
          o.push_back({i, i + 2});
        } else {
          o.push_back({i, i + 1});
        }
      }
      for (int i = 0; i + 2 < t.actions; ++i) {
        if (i % 3 == 1) o.push_back({i - 1, i + 1});
      }
      SynthTaskSpec s = base_spec(t.id, t.actions, std::move(o), feature_dim, n(t.videos));
      s.null_fraction = 0.7;
      out.push_back(std::move(s));
    }
  } else {
    std::string names;
    for (const auto& p : synth_preset_names()) names += (names.empty() ? "" : ", ") + p;
    throw UsageError("unknown synth preset '" + name + "' (expected one of " + names + ")");
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].seed = numkit::derive_seed(seed, i);
  return out;
}

std::vector<SynthTask> synth_tasks(const RunConfig& c) {
  const std::vector<SynthTaskSpec> specs =
      c.synth_tasks.empty() ? synth_preset(c.synth_preset, c.feature_dim, c.synth_seed, c.synth_videos) : c.synth_tasks;
  std::set<std::string> ids;
  std::vector<SynthTask> out;
  for (const auto& s : specs) {
    if (!ids.insert(s.task_id).second) throw SpecError("duplicate synthetic task id '" + s.task_id + "'");
    out.push_back(synth_generate(s));
  }
  return out;
}

Corpus corpus_of(const std::vector<SynthTask>& tasks) {
  Corpus c;
  for (const auto& t : tasks) c.tasks.push_back(t.data);
  return c;
}

}  // namespace adtg
