// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "adtg/corpus/corpus.hpp"
#include "adtg/corpus/formats.hpp"
#include "adtg/corpus/synth.hpp"
#include "adtg/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace adtg;

namespace {

VideoRecord blank_video(int T, int D = 3) {
  VideoRecord v;
  v.video_id = "vid";
  v.task_id = "task";
  v.features = FeatureStream::Zero(T, D);
  for (int t = 0; t < T; ++t) v.features(t, 0) = static_cast<float>(t + 1);  // frame number in column 0
  return v;
}

const ActionVocabulary kVocab("task", {"a", "b", "c"});
constexpr ActionId A{1}, B{2}, C{3}, N = kNullAction;

}  // namespace

TEST_CASE("round_half_up") {
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.4999) == 2);
  CHECK(round_half_up(3.4) == 3);
  CHECK(round_half_up(7.6) == 8);
  CHECK(round_half_up(0.5) == 1);
}

TEST_CASE("vocabulary reserves NULL and EOS") {
  CHECK(kVocab.size() == 3);
  CHECK(kVocab.eos() == ActionId{4});
  CHECK(kVocab.name(kNullAction) == "<NULL>");
  CHECK(kVocab.name(kVocab.eos()) == "<EOS>");
  CHECK(kVocab.id("b") == B);
  CHECK_THROWS_AS(ActionVocabulary("t", {"x", "x"}), DataError);
  CHECK_THROWS_AS(ActionVocabulary("t", {"<EOS>"}), DataError);
  try {
    kVocab.id("zzz");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }
}

TEST_CASE("framewise_labels") {
  SUBCASE("single segment") {
    VideoRecord v = blank_video(10);
    v.segments = {{A, 3.0, 5.0}};
    const std::vector<ActionId> want{N, N, A, A, A, N, N, N, N, N};
    CHECK(framewise_labels(v, kVocab) == want);
  }
  SUBCASE("no segments") {
    const VideoRecord v = blank_video(4);
    CHECK(framewise_labels(v, kVocab) == std::vector<ActionId>(4, N));
  }
  SUBCASE("overlap after rounding names the video") {
    VideoRecord v = blank_video(10);
    v.video_id = "overlapping_one";
    v.segments = {{A, 1.0, 3.4}, {B, 2.6, 6.0}};
    try {
      framewise_labels(v, kVocab);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("overlapping_one") != std::string::npos);
    }
  }
  SUBCASE("segment outside the video") {
    VideoRecord v = blank_video(5);
    v.segments = {{A, 3.0, 5.6}};
    CHECK_THROWS_AS(framewise_labels(v, kVocab), DataError);
  }
}

TEST_CASE("condition_windows") {
  const VideoRecord v = blank_video(10);
  auto frames = [](const numkit::MatrixXd& w) { return std::pair<double, double>{w(0, 0), w(1, 0)}; };
  SUBCASE("rounding rule") {
    const auto w = condition_windows(v, {A, 3.4, 7.6});
    CHECK(frames(w.pre) == std::pair<double, double>{2, 3});
    CHECK(frames(w.post) == std::pair<double, double>{8, 9});
  }
  SUBCASE("start clamp") {
    const auto w = condition_windows(v, {A, 1.0, 4.0});
    CHECK(frames(w.pre) == std::pair<double, double>{1, 1});
  }
  SUBCASE("end clamp") {
    const auto w = condition_windows(v, {A, 6.0, 10.0});
    CHECK(frames(w.post) == std::pair<double, double>{10, 10});
  }
  SUBCASE("flatten keeps frame order") {
    const auto w = condition_windows(v, {A, 3.0, 5.0});
    const auto flat = flatten_window(w.pre);
    CHECK(flat.size() == 6);
    CHECK(flat(0) == 2);
    CHECK(flat(3) == 3);
  }
}

TEST_CASE("compressed_sequence") {
  CHECK(compressed_sequence(std::vector<ActionId>{N, A, A, N, B, B, A}) == std::vector<ActionId>{A, B, A});
  CHECK(compressed_sequence(std::vector<ActionId>{N, N, N}).empty());

  // Run-length encoding oracle with NULL runs dropped.
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint32_t> sym(0, 3);
  std::uniform_int_distribution<int> len(0, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ActionId> labels(static_cast<std::size_t>(len(rng)));
    for (auto& l : labels) l = ActionId{sym(rng)};
    std::vector<std::pair<ActionId, int>> runs;
    for (ActionId l : labels) {
      if (!runs.empty() && runs.back().first == l) {
        ++runs.back().second;
      } else {
        runs.push_back({l, 1});
      }
    }
    std::vector<ActionId> expected;
    for (auto [a, n] : runs)
      if (a != N) expected.push_back(a);
    CHECK(compressed_sequence(labels) == expected);
  }
}

TEST_CASE("labels then compression recover the annotated order") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::uint32_t> act(1, 3);
  std::uniform_int_distribution<int> gap(0, 3), len(1, 5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Segment> segs;
    std::vector<ActionId> order;
    std::uniform_real_distribution<double> jitter(-0.4, 0.4);
    int t = 1 + gap(rng);  // first whole second of the next segment
    for (int i = 0, n = len(rng); i < n; ++i) {
      const ActionId a{act(rng)};
      // Back-to-back repeats of one action merge per second; keep them apart.
      if (!order.empty() && order.back() == a && segs.back().t_end + 1.5 > t) ++t;
      const int l = len(rng);
      segs.push_back({a, std::max(0.0, t + jitter(rng)), t + l - 1 + jitter(rng)});
      if (segs.back().t_end <= segs.back().t_start) segs.back().t_end = segs.back().t_start + 0.1;
      order.push_back(a);
      t += l + gap(rng);
    }
    VideoRecord v = blank_video(t + 2);
    v.segments = segs;
    CHECK(compressed_sequence(framewise_labels(v, kVocab)) == order);
    for (const auto& s : v.segments) {
      const auto w = condition_windows(v, s);
      CHECK(w.pre.rows() == 2);
      CHECK(w.post.rows() == 2);
    }
  }
}

TEST_CASE("split_dataset") {
  auto ids = [](int n) {
    std::vector<std::string> v;
    for (int i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
    return v;
  };
  SUBCASE("full-size task") {
    const Split s = split_dataset(ids(89), 1);
    CHECK(s.train.size() == 50);
    CHECK(s.val.size() == 20);
    CHECK(s.test.size() == 19);
  }
  SUBCASE("minimum") {
    const Split s = split_dataset(ids(3), 1);
    CHECK(s.train.size() == 1);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
  }
  SUBCASE("too few") { CHECK_THROWS_AS(split_dataset(ids(2), 1), DataError); }
  SUBCASE("deterministic and a partition") {
    for (int n : {3, 7, 20, 70, 71, 150}) {
      const Split a = split_dataset(ids(n), 42);
      const Split b = split_dataset(ids(n), 42);
      CHECK(a.train == b.train);
      CHECK(a.val == b.val);
      CHECK(a.test == b.test);
      std::set<std::string> all;
      all.insert(a.train.begin(), a.train.end());
      all.insert(a.val.begin(), a.val.end());
      all.insert(a.test.begin(), a.test.end());
      CHECK(all.size() == static_cast<std::size_t>(n));
      CHECK(a.train.size() + a.val.size() + a.test.size() == static_cast<std::size_t>(n));
      CHECK_FALSE(a.val.empty());
      CHECK_FALSE(a.test.empty());
    }
  }
}

TEST_CASE("synth_generate") {
  SUBCASE("chain has a unique linearization") {
    SynthTaskSpec s = testutil::chain_spec(3, 20, 5);
    const SynthTask t = synth_generate(s);
    for (const auto& v : t.data.videos) {
      CHECK(compressed_sequence(framewise_labels(v, t.data.vocab)) == std::vector<ActionId>{A, B, C});
    }
  }
  SUBCASE("incomparable actions appear in both orders") {
    SynthTaskSpec s;
    s.n_actions = 2;
    s.n_videos = 50;
    s.seed = 3;
    const SynthTask t = synth_generate(s);
    std::set<std::vector<ActionId>> orders(t.sequences.begin(), t.sequences.end());
    CHECK(orders.count({A, B}) == 1);
    CHECK(orders.count({B, A}) == 1);
  }
  SUBCASE("noise-free pre-windows repeat exactly") {
    SynthTaskSpec s = testutil::chain_spec(3, 10, 2);
    s.noise_sigma = 0;
    const SynthTask t = synth_generate(s);
    const auto first = condition_windows(t.data.videos[0], t.data.videos[0].segments[1]).pre;
    for (const auto& v : t.data.videos) CHECK(condition_windows(v, v.segments[1]).pre == first);
  }
  SUBCASE("cyclic order is rejected") {
    SynthTaskSpec s;
    s.n_actions = 3;
    s.partial_order = {{0, 1}, {1, 2}, {2, 0}};
    CHECK_THROWS_AS(synth_generate(s), SpecError);
  }
  SUBCASE("clusters too close for the noise are rejected") {
    SynthTaskSpec s;
    s.noise_sigma = 5.0;
    CHECK_THROWS_AS(synth_generate(s), SpecError);
  }
  SUBCASE("reproducible and topologically ordered") {
    SynthTaskSpec s;
    s.n_actions = 6;
    s.partial_order = {{0, 2}, {1, 2}, {2, 3}, {2, 4}, {4, 5}};
    s.n_videos = 30;
    s.seed = 99;
    s.skip_probability = {0, 0.3, 0, 0, 0.5, 0};
    const SynthTask a = synth_generate(s);
    const SynthTask b = synth_generate(s);
    REQUIRE(a.data.videos.size() == b.data.videos.size());
    for (std::size_t i = 0; i < a.data.videos.size(); ++i) {
      CHECK(a.data.videos[i].features == b.data.videos[i].features);
      CHECK(a.data.videos[i].segments == b.data.videos[i].segments);
    }
    const auto reach = precedence_closure(6, s.partial_order);
    for (const auto& seq : a.sequences) {
      for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j) CHECK_FALSE(reach[seq[j].value - 1][seq[i].value - 1]);
    }
    for (const auto& v : a.data.videos) {
      CHECK(compressed_sequence(framewise_labels(v, a.data.vocab)) == a.sequences[&v - a.data.videos.data()]);
    }
  }
  SUBCASE("null fraction tracks the requested value") {
    SynthTaskSpec s = testutil::chain_spec(6, 60, 8);
    s.null_fraction = 0.72;
    Corpus c;
    c.tasks.push_back(synth_generate(s).data);
    const auto stats = corpus_stats(c);
    CHECK(std::abs(stats[0].null_fraction - 0.72) <= 0.05);
  }
}

TEST_CASE("corpus files") {
  testutil::TempDir dir;
  SynthTaskSpec s = testutil::chain_spec(4, 6, 3);
  s.feature_dim = 5;
  Corpus corpus;
  corpus.tasks.push_back(synth_generate(s).data);
  s.task_id = "second task";
  s.seed = 4;
  corpus.tasks.push_back(synth_generate(s).data);

  SUBCASE("round trip is exact") {
    save_corpus(corpus, dir.path());
    const Corpus back = load_corpus(dir.path());
    REQUIRE(back.tasks.size() == 2);
    // Directory order sorts "second task" before "synth".
    const TaskData& orig = corpus.tasks[0];
    const TaskData& got = back.task(orig.vocab.task_id());
    CHECK(got.vocab == orig.vocab);
    REQUIRE(got.videos.size() == orig.videos.size());
    for (std::size_t i = 0; i < got.videos.size(); ++i) {
      CHECK(got.videos[i].video_id == orig.videos[i].video_id);
      CHECK(got.videos[i].features == orig.videos[i].features);
      CHECK(got.videos[i].segments == orig.videos[i].segments);
    }
  }
  SUBCASE("unknown action is rejected by name") {
    save_corpus(corpus, dir.path());
    const auto file = dir.path() / "tasks" / "synth" / "annotations.jsonl";
    std::ofstream(file, std::ios::app) << R"({"video_id": "synth_v000", "segments": [{"action": "pour water", "t_start": 2, "t_end": 4}]})"
                                       << "\n";
    try {
      load_corpus(dir.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("pour water") != std::string::npos);
    }
  }
  SUBCASE("malformed line reports its number") {
    save_corpus(corpus, dir.path());
    const auto file = dir.path() / "tasks" / "synth" / "annotations.jsonl";
    std::ofstream(file, std::ios::app) << "{not json\n";
    try {
      load_corpus(dir.path());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("annotations.jsonl:7") != std::string::npos);
    }
  }
  SUBCASE("feature dimension mismatch") {
    save_corpus(corpus, dir.path());
    write_features(dir.path() / "features" / "synth_v002.feat", FeatureStream::Zero(80, 7));
    CHECK_THROWS_AS(load_corpus(dir.path()), DataError);
  }
  SUBCASE("bad magic") {
    save_corpus(corpus, dir.path());
    const auto f = dir.path() / "features" / "synth_v001.feat";
    std::fstream io(f, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(0);
    io.write("XXXX", 4);
    io.close();
    CHECK_THROWS_AS(load_corpus(dir.path()), ParseError);
  }
  SUBCASE("missing corpus") { CHECK_THROWS_AS(load_corpus(dir.path() / "nowhere"), IoError); }
}

TEST_CASE("stats report lists one row per task") {
  Corpus corpus;
  for (int i = 0; i < 18; ++i) {
    SynthTaskSpec s = testutil::chain_spec(3, 3, static_cast<std::uint64_t>(i));
    s.task_id = "task" + std::to_string(i);
    corpus.tasks.push_back(synth_generate(s).data);
  }
  const auto stats = corpus_stats(corpus);
  CHECK(stats.size() == 18);
  const std::string table = format_stats_table(stats);
  CHECK(std::count(table.begin(), table.end(), '\n') == 19);
  CHECK(stats[3].action_space == 3);
  CHECK(stats[3].mean_compressed_length == 3.0);
}
