// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/corpus/formats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "adtg/corpus/corpus.hpp"
#include "adtg/error.hpp"
#include "json.hpp"

namespace adtg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

void check_name(const std::string& kind, const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
    throw DataError(kind + " '" + name + "' cannot be used as a file name");
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_features(const fs::path& path, const FeatureStream& features) {
  std::string out(kFeatureMagic, kFeatureMagic + 8);
  put_le(out, kFeatureVersion);
  put_le(out, static_cast<std::uint32_t>(features.rows()));
  put_le(out, static_cast<std::uint32_t>(features.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(features.size()) * 4);
  for (Eigen::Index i = 0; i < features.size(); ++i) put_le(out, features.data()[i]);
  write_file(path, out);
}

FeatureStream read_features(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = "'" + path.string() + "'";
  if (bytes.size() < 18) throw ParseError(where + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  if (std::memcmp(bytes.data(), kFeatureMagic, 8) != 0) throw ParseError(where + ": bad magic at offset 0");
  const auto version = get_le<std::uint16_t>(p + 8);
  if (version != kFeatureVersion) {
    throw ParseError(where + ": unsupported version " + std::to_string(version) + " at offset 8");
  }
  const auto T = get_le<std::uint32_t>(p + 10);
  const auto D = get_le<std::uint32_t>(p + 14);
  const std::size_t expected = 18 + static_cast<std::size_t>(T) * D * 4;
  if (bytes.size() != expected) {
    throw ParseError(where + ": expected " + std::to_string(expected) + " bytes for " + std::to_string(T) + "x" +
                     std::to_string(D) + " features, found " + std::to_string(bytes.size()));
  }
  FeatureStream f(T, D);
  for (std::size_t i = 0; i < static_cast<std::size_t>(T) * D; ++i) {
    f.data()[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 18 + 4 * i));
    if (!std::isfinite(f.data()[i])) throw DataError(where + ": non-finite feature at offset " + std::to_string(18 + 4 * i));
  }
  return f;
}

std::string vocabulary_to_json(const ActionVocabulary& vocab) {
  json j = {{"task_id", vocab.task_id()}, {"actions", vocab.names()}};
  return j.dump(2) + "\n";
}

ActionVocabulary vocabulary_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
  try {
    return ActionVocabulary(j.at("task_id").get<std::string>(), j.at("actions").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
}

std::string annotation_to_json(const VideoRecord& video, const ActionVocabulary& vocab) {
  json segs = json::array();
  for (const Segment& s : video.segments) {
    segs.push_back({{"action", vocab.name(s.action)}, {"t_start", s.t_start}, {"t_end", s.t_end}});
  }
  return json{{"video_id", video.video_id}, {"segments", segs}}.dump();
}

void save_corpus(const Corpus& corpus, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "tasks", ec);
  fs::create_directories(root / "features", ec);
  if (ec) throw IoError("cannot create corpus directories under '" + root.string() + "': " + ec.message());
  for (const TaskData& task : corpus.tasks) {
    check_name("task id", task.vocab.task_id());
    const fs::path dir = root / "tasks" / task.vocab.task_id();
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    write_file(dir / "vocabulary.json", vocabulary_to_json(task.vocab));
    std::string lines;
    for (const VideoRecord& v : task.videos) {
      check_name("video id", v.video_id);
      validate_video(v, task.vocab);
      lines += annotation_to_json(v, task.vocab);
      lines += '\n';
      write_features(root / "features" / (v.video_id + ".feat"), v.features);
    }
    write_file(dir / "annotations.jsonl", lines);
  }
}

Corpus load_corpus(const fs::path& root) {
  const fs::path tasks_dir = root / "tasks";
  if (!fs::is_directory(tasks_dir)) throw IoError("no corpus at '" + root.string() + "' (missing tasks/)");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(tasks_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());

  Corpus corpus;
  int feature_dim = -1;
  for (const fs::path& dir : dirs) {
    TaskData task;
    task.vocab = vocabulary_from_json(read_file(dir / "vocabulary.json"));
    std::istringstream lines(read_file(dir / "annotations.jsonl"));
    const std::string file = (dir / "annotations.jsonl").string();
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = file + ":" + std::to_string(lineno);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(where + ": " + e.what());
      }
      VideoRecord v;
      v.task_id = task.vocab.task_id();
      try {
        v.video_id = j.at("video_id").get<std::string>();
        for (const json& s : j.at("segments")) {
          const std::string action = s.at("action").get<std::string>();
          const auto id = task.vocab.find(action);
          if (!id) throw DataError(where + ": unknown action '" + action + "'");
          v.segments.push_back(Segment{*id, s.at("t_start").get<double>(), s.at("t_end").get<double>()});
        }
      } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
      }
      check_name("video id", v.video_id);
      v.features = read_features(root / "features" / (v.video_id + ".feat"));
      if (feature_dim >= 0 && v.feature_dim() != feature_dim) {
        throw DataError("video '" + v.video_id + "' has feature dim " + std::to_string(v.feature_dim()) +
                        ", corpus uses " + std::to_string(feature_dim));
      }
      feature_dim = v.feature_dim();
      validate_video(v, task.vocab);
      task.videos.push_back(std::move(v));
    }
    corpus.tasks.push_back(std::move(task));
  }
  return corpus;
}

}  // namespace adtg
