// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/pipeline/config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "adtg/error.hpp"
#include "json.hpp"

namespace adtg {

using nlohmann::json;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_history: return "no_history";
    case Variant::random_embed: return "random_embed";
    case Variant::onehot_embed: return "onehot_embed";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::full, Variant::no_history, Variant::random_embed, Variant::onehot_embed}) {
    if (s == to_string(v)) return v;
  }
  throw UsageError("unknown variant '" + s + "' (expected full, no_history, random_embed or onehot_embed)");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::uint64_t get_u64(const json& j, const std::string& key) {
  require(j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0),
          "config key '" + key + "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

int get_int(const json& j, const std::string& key) {
  require(j.is_number_integer(), "config key '" + key + "' must be an integer");
  const auto v = j.get<std::int64_t>();
  require(v >= INT32_MIN && v <= INT32_MAX, "config key '" + key + "' is out of range");
  return static_cast<int>(v);
}

double get_double(const json& j, const std::string& key) {
  require(j.is_number(), "config key '" + key + "' must be a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& key) {
  require(j.is_boolean(), "config key '" + key + "' must be true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& key) {
  require(j.is_string(), "config key '" + key + "' must be a string");
  return j.get<std::string>();
}

json spec_json(const SynthTaskSpec& s) {
  json order = json::array();
  for (const auto& [a, b] : s.partial_order) order.push_back({a, b});
  return {{"task_id", s.task_id},
          {"n_actions", s.n_actions},
          {"partial_order", order},
          {"feature_dim", s.feature_dim},
          {"noise_sigma", s.noise_sigma},
          {"null_fraction", s.null_fraction},
          {"n_videos", s.n_videos},
          {"seed", s.seed},
          {"separable", s.separable},
          {"min_segment_seconds", s.min_segment_seconds},
          {"max_segment_seconds", s.max_segment_seconds},
          {"skip_probability", s.skip_probability},
          {"shared_clusters", s.shared_clusters},
          {"action_names", s.action_names}};
}

SynthTaskSpec spec_from(const json& j, int default_feature_dim) {
  require(j.is_object(), "synth task spec must be a JSON object");
  SynthTaskSpec s;
  s.feature_dim = default_feature_dim;
  for (const auto& [key, v] : j.items()) {
    const std::string k = "synth_tasks." + key;
    try {
      if (key == "task_id") s.task_id = get_string(v, k);
      else if (key == "n_actions") s.n_actions = get_int(v, k);
      else if (key == "partial_order") s.partial_order = v.get<std::vector<std::pair<int, int>>>();
      else if (key == "feature_dim") s.feature_dim = get_int(v, k);
      else if (key == "noise_sigma") s.noise_sigma = get_double(v, k);
      else if (key == "null_fraction") s.null_fraction = get_double(v, k);
      else if (key == "n_videos") s.n_videos = get_int(v, k);
      else if (key == "seed") s.seed = get_u64(v, k);
      else if (key == "separable") s.separable = get_bool(v, k);
      else if (key == "min_segment_seconds") s.min_segment_seconds = get_int(v, k);
      else if (key == "max_segment_seconds") s.max_segment_seconds = get_int(v, k);
      else if (key == "skip_probability") s.skip_probability = v.get<std::vector<double>>();
      else if (key == "shared_clusters") s.shared_clusters = v.get<std::vector<std::vector<int>>>();
      else if (key == "action_names") s.action_names = v.get<std::vector<std::string>>();
      else throw ConfigError("unknown synth task key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + k + "': " + e.what());
    }
  }
  return s;
}

json to_json(const RunConfig& c) {
  json tasks = json::array();
  for (const auto& s : c.synth_tasks) tasks.push_back(spec_json(s));
  return {{"corpus", c.corpus},
          {"out", c.out},
          {"seeds", c.seeds},
          {"split_seed", c.split_seed},
          {"feature_dim", c.feature_dim},
          {"condition_dim", c.condition_dim},
          {"embedding_dim", c.embedding_dim},
          {"hidden_dim", c.hidden_dim},
          {"margin", c.margin},
          {"embedding_lr", c.embedding_lr},
          {"guidance_lr", c.guidance_lr},
          {"embedding_epochs", c.embedding_epochs},
          {"tracker_epochs", c.tracker_epochs},
          {"recommender_epochs", c.recommender_epochs},
          {"beam_width", c.beam_width},
          {"max_plan_len", c.max_plan_len},
          {"variant", to_string(c.variant)},
          {"history_mode", to_string(c.history_mode)},
          {"joint_rnn", c.joint_rnn},
          {"cross_task_negatives", c.cross_task_negatives},
          {"eval_split", c.eval_split},
          {"cut_seed", c.cut_seed},
          {"complete_start", c.complete_start},
          {"synth_preset", c.synth_preset},
          {"synth_seed", c.synth_seed},
          {"synth_videos", c.synth_videos},
          {"synth_tasks", tasks}};
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = [] {
    std::map<std::string, Setter> m;
    m["corpus"] = [](RunConfig& c, const json& v) { c.corpus = get_string(v, "corpus"); };
    m["out"] = [](RunConfig& c, const json& v) { c.out = get_string(v, "out"); };
    m["seeds"] = [](RunConfig& c, const json& v) {
      require(v.is_array(), "config key 'seeds' must be a list");
      c.seeds.clear();
      for (const auto& x : v) c.seeds.push_back(get_u64(x, "seeds"));
    };
    m["split_seed"] = [](RunConfig& c, const json& v) { c.split_seed = get_u64(v, "split_seed"); };
    m["feature_dim"] = [](RunConfig& c, const json& v) { c.feature_dim = get_int(v, "feature_dim"); };
    m["condition_dim"] = [](RunConfig& c, const json& v) { c.condition_dim = get_int(v, "condition_dim"); };
    m["embedding_dim"] = [](RunConfig& c, const json& v) { c.embedding_dim = get_int(v, "embedding_dim"); };
    m["hidden_dim"] = [](RunConfig& c, const json& v) { c.hidden_dim = get_int(v, "hidden_dim"); };
    m["margin"] = [](RunConfig& c, const json& v) { c.margin = get_double(v, "margin"); };
    m["embedding_lr"] = [](RunConfig& c, const json& v) { c.embedding_lr = get_double(v, "embedding_lr"); };
    m["guidance_lr"] = [](RunConfig& c, const json& v) { c.guidance_lr = get_double(v, "guidance_lr"); };
    m["embedding_epochs"] = [](RunConfig& c, const json& v) { c.embedding_epochs = get_int(v, "embedding_epochs"); };
    m["tracker_epochs"] = [](RunConfig& c, const json& v) { c.tracker_epochs = get_int(v, "tracker_epochs"); };
    m["recommender_epochs"] = [](RunConfig& c, const json& v) {
      c.recommender_epochs = get_int(v, "recommender_epochs");
    };
    m["beam_width"] = [](RunConfig& c, const json& v) { c.beam_width = get_int(v, "beam_width"); };
    m["max_plan_len"] = [](RunConfig& c, const json& v) { c.max_plan_len = get_int(v, "max_plan_len"); };
    m["variant"] = [](RunConfig& c, const json& v) {
      try {
        c.variant = variant_from_string(get_string(v, "variant"));
      } catch (const UsageError& e) {
        throw ConfigError(e.what());
      }
    };
    m["history_mode"] = [](RunConfig& c, const json& v) {
      try {
        c.history_mode = history_mode_from_string(get_string(v, "history_mode"));
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    };
    m["joint_rnn"] = [](RunConfig& c, const json& v) { c.joint_rnn = get_bool(v, "joint_rnn"); };
    m["cross_task_negatives"] = [](RunConfig& c, const json& v) {
      c.cross_task_negatives = get_bool(v, "cross_task_negatives");
    };
    m["eval_split"] = [](RunConfig& c, const json& v) { c.eval_split = get_string(v, "eval_split"); };
    m["cut_seed"] = [](RunConfig& c, const json& v) { c.cut_seed = get_u64(v, "cut_seed"); };
    m["complete_start"] = [](RunConfig& c, const json& v) { c.complete_start = get_int(v, "complete_start"); };
    m["synth_preset"] = [](RunConfig& c, const json& v) { c.synth_preset = get_string(v, "synth_preset"); };
    m["synth_seed"] = [](RunConfig& c, const json& v) { c.synth_seed = get_u64(v, "synth_seed"); };
    m["synth_videos"] = [](RunConfig& c, const json& v) { c.synth_videos = get_int(v, "synth_videos"); };
    // Needs feature_dim first; from_json applies it last.
    m["synth_tasks"] = [](RunConfig& c, const json& v) {
      require(v.is_array(), "config key 'synth_tasks' must be a list");
      c.synth_tasks.clear();
      for (const auto& s : v) c.synth_tasks.push_back(spec_from(s, c.feature_dim));
    };
    return m;
  }();
  return s;
}

RunConfig from_json(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "synth_tasks") continue;
    const auto it = setters().find(key);
    require(it != setters().end(), "unknown config key '" + key + "'");
    it->second(c, v);
  }
  if (j.contains("synth_tasks")) setters().at("synth_tasks")(c, j.at("synth_tasks"));
  c.validate();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  require(!corpus.empty(), "corpus path is empty");
  require(!out.empty(), "output directory is empty");
  require(!seeds.empty(), "seed list is empty");
  const std::pair<const char*, int> positive[] = {{"feature_dim", feature_dim},   {"condition_dim", condition_dim},
                                                  {"embedding_dim", embedding_dim}, {"hidden_dim", hidden_dim},
                                                  {"beam_width", beam_width},     {"max_plan_len", max_plan_len}};
  for (const auto& [name, v] : positive) require(v > 0, std::string(name) + " must be positive");
  const std::pair<const char*, double> rates[] = {
      {"margin", margin}, {"embedding_lr", embedding_lr}, {"guidance_lr", guidance_lr}};
  for (const auto& [name, v] : rates) require(std::isfinite(v) && v > 0, std::string(name) + " must be positive");
  const std::pair<const char*, int> counts[] = {{"embedding_epochs", embedding_epochs},
                                                {"tracker_epochs", tracker_epochs},
                                                {"recommender_epochs", recommender_epochs},
                                                {"complete_start", complete_start},
                                                {"synth_videos", synth_videos}};
  for (const auto& [name, v] : counts) require(v >= 0, std::string(name) + " must not be negative");
  require(eval_split == "train" || eval_split == "val" || eval_split == "test",
          "eval_split must be train, val or test");
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

std::string config_to_json(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

void apply_override(RunConfig& c, const std::string& assignment) {
  std::string a = assignment;
  if (a.rfind("--", 0) == 0) a.erase(0, 2);
  const auto eq = a.find('=');
  require(eq != std::string::npos && eq > 0, "override '" + assignment + "' is not key=value");
  const std::string key = a.substr(0, eq), raw = a.substr(eq + 1);
  json j = to_json(c);
  require(j.contains(key), "unknown config key '" + key + "'");

  auto parse = [](const std::string& s) {
    json v = json::parse(s, nullptr, false);
    return v.is_discarded() ? json(s) : v;
  };
  json v = parse(raw);
  if (j[key].is_string() && !v.is_string()) v = raw;
  if (j[key].is_array() && !v.is_array() && key != "synth_tasks") {
    json list = json::array();
    std::size_t start = 0;
    while (start <= raw.size()) {
      const auto comma = raw.find(',', start);
      const std::string item = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) list.push_back(parse(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    v = list;
  }
  j[key] = v;
  c = from_json(j);
}

std::string synth_spec_to_json(const SynthTaskSpec& s) { return spec_json(s).dump(2) + "\n"; }

SynthTaskSpec synth_spec_from_json(const std::string& text, int default_feature_dim) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  return spec_from(j, default_feature_dim);
}

EmbeddingConfig embedding_config(const RunConfig& c) {
  EmbeddingConfig e;
  e.condition_dim = c.condition_dim;
  e.embedding_dim = c.embedding_dim;
  e.hidden_dim = c.hidden_dim;
  e.margin = c.margin;
  e.learning_rate = c.embedding_lr;
  e.epochs = c.embedding_epochs;
  e.cross_task_negatives = c.cross_task_negatives;
  return e;
}

GuidanceConfig guidance_config(const RunConfig& c) {
  GuidanceConfig g;
  g.rnn_hidden = c.hidden_dim;
  g.scorer_hidden = c.hidden_dim;
  g.learning_rate = c.guidance_lr;
  g.tracker_epochs = c.tracker_epochs;
  g.recommender_epochs = c.recommender_epochs;
  g.joint_rnn = c.joint_rnn;
  g.use_history = c.variant != Variant::no_history;
  g.history_mode = c.history_mode;
  return g;
}

PlanOptions plan_options(const RunConfig& c) { return {c.beam_width, c.max_plan_len}; }

}  // namespace adtg
