// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/pipeline/bundle_io.hpp"

#include <bit>
#include <cstdio>

#include "adtg/corpus/formats.hpp"
#include "adtg/error.hpp"
#include "adtg/numkit/hash.hpp"
#include "json.hpp"

namespace adtg {

namespace fs = std::filesystem;
using nlohmann::json;
using numkit::MatrixXd;
using numkit::VectorXd;

namespace {

constexpr int kBundleVersion = 1;

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path with_ext(const fs::path& stem, const char* ext) { return fs::path(stem.string() + ext); }

/// Accumulates named column-major parameters into one blob.
class BlobWriter {
 public:
  template <typename Derived>
  void add(const std::string& name, const Eigen::PlainObjectBase<Derived>& m) {
    table_.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", count_}});
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(static_cast<double>(m.data()[i]));
      for (int k = 0; k < 8; ++k) blob_.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
    }
    count_ += static_cast<std::size_t>(m.size());
  }
  void add_mlp(const std::string& name, const numkit::Mlp2& p) {
    add(name + ".w1", p.w1);
    add(name + ".b1", p.b1);
    add(name + ".w2", p.w2);
    add(name + ".b2", p.b2);
  }
  const json& table() const { return table_; }
  const std::string& blob() const { return blob_; }

 private:
  json table_ = json::array();
  std::string blob_;
  std::size_t count_ = 0;
};

class BlobReader {
 public:
  BlobReader(const json& table, std::string blob, std::string where)
      : table_(table), blob_(std::move(blob)), where_(std::move(where)) {
    if (blob_.size() % 8 != 0) throw DataError(where_ + ": blob size is not a multiple of 8 bytes");
  }

  template <typename Derived>
  void get(const std::string& name, Eigen::PlainObjectBase<Derived>& m) const {
    for (const auto& e : table_) {
      if (e.at("name").get<std::string>() != name) continue;
      const auto rows = e.at("rows").get<Eigen::Index>(), cols = e.at("cols").get<Eigen::Index>();
      const auto offset = e.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 || (Derived::ColsAtCompileTime == 1 && cols != 1)) {
        throw DataError(where_ + ": parameter '" + name + "' has a bad shape");
      }
      const auto n = static_cast<std::size_t>(rows * cols);
      if ((offset + n) * 8 > blob_.size()) throw DataError(where_ + ": parameter '" + name + "' runs past the blob");
      m.resize(rows, cols);
      const auto* p = reinterpret_cast<const unsigned char*>(blob_.data()) + offset * 8;
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(p[8 * i + k]) << (8 * k);
        m.data()[i] = std::bit_cast<double>(bits);
      }
      return;
    }
    throw DataError(where_ + ": parameter '" + name + "' is missing");
  }
  void get_mlp(const std::string& name, numkit::Mlp2& p, const json& manifest) const {
    get(name + ".w1", p.w1);
    get(name + ".b1", p.b1);
    get(name + ".w2", p.w2);
    get(name + ".b2", p.b2);
    p.activation = numkit::activation_from_string(manifest.at("activations").at(name).get<std::string>());
  }

 private:
  const json& table_;
  std::string blob_;
  std::string where_;
};

json record_json(const StageRecord& r) { return {{"stage", r.stage}, {"seed", r.seed}, {"config_hash", r.config_hash}}; }

StageRecord record_from(const json& j) {
  return {j.at("stage").get<std::string>(), j.at("seed").get<std::uint64_t>(), j.at("config_hash").get<std::string>()};
}

void write_bundle(const fs::path& stem, json manifest, const BlobWriter& w) {
  std::error_code ec;
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path(), ec);
  manifest["format"] = "adtg-bundle";
  manifest["version"] = kBundleVersion;
  manifest["blob"] = with_ext(stem, ".bin").filename().string();
  manifest["blob_values"] = w.blob().size() / 8;
  manifest["blob_fnv1a"] = hex(numkit::fnv1a(w.blob()));
  manifest["parameters"] = w.table();
  // Blob first: a manifest never points at a stale blob from a previous write.
  write_file(with_ext(stem, ".bin"), w.blob());
  write_file(with_ext(stem, ".json"), manifest.dump(2) + "\n");
}

struct RawBundle {
  json manifest;
  std::string blob;
};

json read_manifest(const fs::path& stem, const char* kind) {
  const fs::path path = with_ext(stem, ".json");
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!m.is_object() || m.value("format", "") != "adtg-bundle") throw ParseError(path.string() + ": not a bundle manifest");
  if (m.value("version", 0) != kBundleVersion) throw ParseError(path.string() + ": unsupported bundle version");
  if (m.value("kind", "") != kind) {
    throw ParseError(path.string() + ": expected a " + kind + " bundle, found '" + m.value("kind", "") + "'");
  }
  return m;
}

RawBundle read_bundle(const fs::path& stem, const char* kind) {
  RawBundle r{read_manifest(stem, kind), {}};
  r.blob = read_file(with_ext(stem, ".bin"));
  const std::string where = with_ext(stem, ".bin").string();
  if (r.blob.size() != 8 * r.manifest.at("blob_values").get<std::size_t>()) {
    throw DataError(where + ": blob size does not match the manifest");
  }
  if (hex(numkit::fnv1a(r.blob)) != r.manifest.at("blob_fnv1a").get<std::string>()) {
    throw DataError(where + ": blob checksum does not match the manifest");
  }
  return r;
}

template <typename F>
auto guarded(const fs::path& stem, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(with_ext(stem, ".json").string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DataError(with_ext(stem, ".json").string() + ": " + e.what());
  }
}

}  // namespace

void save_embedding_bundle(const fs::path& stem, const EmbeddingBundle& b, const StageRecord& r) {
  b.validate();
  BlobWriter w;
  w.add_mlp("cond_gen", b.cond_gen);
  w.add_mlp("predictor", b.predictor);
  w.add("table", b.table);
  json keys = json::array();
  for (const auto& [task, action] : b.keys) keys.push_back({task, action});
  json m = {{"kind", "embedding"},
            {"stage", record_json(r)},
            {"feature_dim", b.feature_dim()},
            {"condition_dim", b.condition_dim()},
            {"embedding_dim", b.embedding_dim()},
            {"margin", b.margin},
            {"keys", keys},
            {"activations", {{"cond_gen", to_string(b.cond_gen.activation)}, {"predictor", to_string(b.predictor.activation)}}},
            {"fingerprint", hex(fingerprint(b))}};
  write_bundle(stem, std::move(m), w);
}

Stored<EmbeddingBundle> load_embedding_bundle(const fs::path& stem) {
  return guarded(stem, [&] {
    const RawBundle raw = read_bundle(stem, "embedding");
    const json& m = raw.manifest;
    const BlobReader rd(m.at("parameters"), raw.blob, with_ext(stem, ".bin").string());
    Stored<EmbeddingBundle> out;
    EmbeddingBundle& b = out.bundle;
    rd.get_mlp("cond_gen", b.cond_gen, m);
    rd.get_mlp("predictor", b.predictor, m);
    rd.get("table", b.table);
    for (const auto& k : m.at("keys")) b.keys.emplace_back(k.at(0).get<std::string>(), k.at(1).get<std::string>());
    b.margin = m.at("margin").get<double>();
    b.validate();
    if (hex(fingerprint(b)) != m.at("fingerprint").get<std::string>()) {
      throw DataError(with_ext(stem, ".json").string() + ": embedding fingerprint does not match its parameters");
    }
    out.record = record_from(m.at("stage"));
    return out;
  });
}

void save_guidance_bundle(const fs::path& stem, const GuidanceBundle& b, const StageRecord& r) {
  b.validate();
  BlobWriter w;
  w.add("history_rnn.w_in", b.history_rnn.w_in);
  w.add("history_rnn.w_h", b.history_rnn.w_h);
  w.add("history_rnn.b", b.history_rnn.b);
  w.add_mlp("track_scorer", b.track_scorer);
  w.add_mlp("rec_scorer", b.rec_scorer);
  w.add("null_embedding", b.null_embedding);
  w.add("eos_embedding", b.eos_embedding);
  json m = {{"kind", "guidance"},
            {"stage", record_json(r)},
            {"feature_dim", b.feature_dim()},
            {"embedding_dim", b.embedding_dim()},
            {"hidden_dim", b.hidden_dim()},
            {"use_history", b.use_history},
            {"history_mode", to_string(b.history_mode)},
            {"embedding_fingerprint", hex(b.embedding_fingerprint)},
            {"activations",
             {{"track_scorer", to_string(b.track_scorer.activation)}, {"rec_scorer", to_string(b.rec_scorer.activation)}}}};
  write_bundle(stem, std::move(m), w);
}

Stored<GuidanceBundle> load_guidance_bundle(const fs::path& stem) {
  return guarded(stem, [&] {
    const RawBundle raw = read_bundle(stem, "guidance");
    const json& m = raw.manifest;
    const BlobReader rd(m.at("parameters"), raw.blob, with_ext(stem, ".bin").string());
    Stored<GuidanceBundle> out;
    GuidanceBundle& b = out.bundle;
    rd.get("history_rnn.w_in", b.history_rnn.w_in);
    rd.get("history_rnn.w_h", b.history_rnn.w_h);
    rd.get("history_rnn.b", b.history_rnn.b);
    rd.get_mlp("track_scorer", b.track_scorer, m);
    rd.get_mlp("rec_scorer", b.rec_scorer, m);
    rd.get("null_embedding", b.null_embedding);
    rd.get("eos_embedding", b.eos_embedding);
    b.use_history = m.at("use_history").get<bool>();
    b.history_mode = history_mode_from_string(m.at("history_mode").get<std::string>());
    b.embedding_fingerprint = std::stoull(m.at("embedding_fingerprint").get<std::string>(), nullptr, 16);
    b.validate();
    out.record = record_from(m.at("stage"));
    return out;
  });
}

StageRecord read_stage_record(const fs::path& stem) {
  return guarded(stem, [&] {
    const json m = json::parse(read_file(with_ext(stem, ".json")));
    return record_from(m.at("stage"));
  });
}

bool bundle_exists(const fs::path& stem) {
  return fs::is_regular_file(with_ext(stem, ".json")) && fs::is_regular_file(with_ext(stem, ".bin"));
}

std::string loss_csv(const std::vector<double>& epoch_loss) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, epoch_loss[i]);
    out += buf;
  }
  return out;
}

}  // namespace adtg
