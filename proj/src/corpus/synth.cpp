// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/corpus/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_map>

#include "adtg/error.hpp"

namespace adtg {

using numkit::MatrixXd;
using numkit::VectorXd;

std::vector<std::vector<bool>> precedence_closure(int n, const std::vector<std::pair<int, int>>& order) {
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (auto [a, b] : order) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw SpecError("partial order references an unknown action");
    reach[a][b] = true;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (reach[i][k])
        for (int j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  for (int i = 0; i < n; ++i) {
    if (reach[i][i]) throw SpecError("partial order is cyclic (action " + std::to_string(i) + ")");
  }
  return reach;
}

namespace {

/// Uniform sampling over the linear extensions of the precedence relation
/// restricted to `items`, by counting completions of every reachable prefix set.
class LinearExtensionSampler {
 public:
  LinearExtensionSampler(const std::vector<int>& items, const std::vector<std::vector<bool>>& reach) : items_(items) {
    const std::size_t k = items.size();
    preds_.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i)
        if (reach[items[i]][items[j]]) preds_[j] |= 1u << i;
    full_ = k == 32 ? ~0u : (1u << k) - 1;
  }

  std::vector<int> sample(numkit::Rng& rng) {
    std::vector<int> out;
    std::uint32_t placed = 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (placed != full_) {
      const double total = count(placed);
      double r = u(rng) * total;
      int chosen = -1;
      for (std::size_t v = 0; v < items_.size(); ++v) {
        if (!available(placed, v)) continue;
        chosen = static_cast<int>(v);
        r -= count(placed | (1u << v));
        if (r < 0) break;
      }
      placed |= 1u << chosen;
      out.push_back(items_[static_cast<std::size_t>(chosen)]);
    }
    return out;
  }

 private:
  bool available(std::uint32_t placed, std::size_t v) const {
    return !(placed & (1u << v)) && (preds_[v] & placed) == preds_[v];
  }

  double count(std::uint32_t placed) {
    if (placed == full_) return 1.0;
    if (auto it = memo_.find(placed); it != memo_.end()) return it->second;
    double total = 0;
    for (std::size_t v = 0; v < items_.size(); ++v) {
      if (available(placed, v)) total += count(placed | (1u << v));
    }
    memo_.emplace(placed, total);
    return total;
  }

  std::vector<int> items_;
  std::vector<std::uint32_t> preds_;
  std::uint32_t full_ = 0;
  std::unordered_map<std::uint32_t, double> memo_;
};

MatrixXd uniform_rows(numkit::Rng& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

void check_separation(const std::vector<VectorXd>& clusters, double min_dist, const char* block) {
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      const double d = (clusters[i] - clusters[j]).norm();
      if (d == 0) continue;  // shared cluster
      if (d <= min_dist) {
        throw SpecError(std::string("cluster centres in the ") + block + " block are " + std::to_string(d) +
                        " apart, need more than 4 * noise_sigma = " + std::to_string(min_dist));
      }
    }
  }
}

void validate(const SynthTaskSpec& s) {
  if (s.n_actions < 1 || s.n_actions > 24) throw SpecError("n_actions must be in 1..24");
  if (s.feature_dim < 2) throw SpecError("feature_dim must be at least 2");
  if (!(s.noise_sigma >= 0)) throw SpecError("noise_sigma must be non-negative");
  if (!(s.null_fraction >= 0 && s.null_fraction < 1)) throw SpecError("null_fraction must be in [0, 1)");
  if (s.n_videos < 1) throw SpecError("n_videos must be positive");
  if (s.min_segment_seconds < 2 || s.max_segment_seconds < s.min_segment_seconds) {
    throw SpecError("segment lengths need 2 <= min <= max");
  }
  if (!s.skip_probability.empty()) {
    if (static_cast<int>(s.skip_probability.size()) != s.n_actions) throw SpecError("skip_probability needs one entry per action");
    for (double p : s.skip_probability)
      if (!(p >= 0 && p < 1)) throw SpecError("skip probabilities must be in [0, 1)");
  }
  std::vector<bool> seen(static_cast<std::size_t>(s.n_actions));
  for (const auto& g : s.shared_clusters) {
    for (int a : g) {
      if (a < 0 || a >= s.n_actions) throw SpecError("shared cluster references an unknown action");
      if (seen[a]) throw SpecError("action " + std::to_string(a) + " is in two shared clusters");
      seen[a] = true;
    }
  }
  if (!s.action_names.empty() && static_cast<int>(s.action_names.size()) != s.n_actions) {
    throw SpecError("action_names needs one entry per action");
  }
}

}  // namespace

SynthTask synth_generate(const SynthTaskSpec& spec) {
  validate(spec);
  const auto reach = precedence_closure(spec.n_actions, spec.partial_order);
  numkit::Rng rng(spec.seed);

  const int n = spec.n_actions;
  const int ds = spec.feature_dim / 2;
  const int da = spec.feature_dim - ds;

  auto share = [&](ClusterCenters& c) {
    for (const auto& g : spec.shared_clusters) {
      for (std::size_t i = 1; i < g.size(); ++i) {
        c.pre.row(g[i]) = c.pre.row(g[0]);
        c.post.row(g[i]) = c.post.row(g[0]);
        c.activity.row(g[i]) = c.activity.row(g[0]);
      }
    }
  };
  auto check = [&](const ClusterCenters& c) {
    std::vector<VectorXd> state{c.background_state}, activity{c.background_activity};
    for (int a = 0; a < n; ++a) {
      state.push_back(c.pre.row(a).transpose());
      state.push_back(c.post.row(a).transpose());
      activity.push_back(c.activity.row(a).transpose());
    }
    check_separation(state, 4 * spec.noise_sigma, "state");
    check_separation(activity, 4 * spec.noise_sigma, "activity");
  };

  ClusterCenters c;
  if (spec.centers) {
    c = *spec.centers;
    if (c.pre.rows() != n || c.post.rows() != n || c.activity.rows() != n || c.pre.cols() != ds ||
        c.post.cols() != ds || c.activity.cols() != da || c.background_state.size() != ds ||
        c.background_activity.size() != da) {
      throw SpecError("cluster centres do not match n_actions and feature_dim");
    }
    share(c);
    if (spec.separable) check(c);
  } else {
    // Redraw until separated; give up after a bounded number of attempts.
    constexpr int kAttempts = 200;
    for (int attempt = 1;; ++attempt) {
      c.pre = uniform_rows(rng, n, ds);
      c.post = uniform_rows(rng, n, ds);
      c.activity = uniform_rows(rng, n, da);
      c.background_state = uniform_rows(rng, 1, ds).row(0).transpose();
      c.background_activity = uniform_rows(rng, 1, da).row(0).transpose();
      share(c);
      if (!spec.separable) break;
      try {
        check(c);
        break;
      } catch (const SpecError&) {
        if (attempt == kAttempts) throw;
      }
    }
  }

  std::vector<std::string> names = spec.action_names;
  if (names.empty()) {
    for (int a = 0; a < n; ++a) names.push_back("a" + std::to_string(a));
  }

  SynthTask out;
  out.centers = c;
  out.data.vocab = ActionVocabulary(spec.task_id, names);
  const ActionId eos = out.data.vocab.eos();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  std::uniform_int_distribution<int> seg_len(spec.min_segment_seconds, spec.max_segment_seconds);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::unordered_map<std::uint32_t, LinearExtensionSampler> samplers;

  for (int vi = 0; vi < spec.n_videos; ++vi) {
    std::vector<int> included;
    do {
      included.clear();
      for (int a = 0; a < n; ++a) {
        const double skip = spec.skip_probability.empty() ? 0.0 : spec.skip_probability[a];
        if (skip == 0.0 || unit(rng) >= skip) included.push_back(a);
      }
    } while (included.empty());
    std::uint32_t key = 0;
    for (int a : included) key |= 1u << a;
    auto it = samplers.find(key);
    if (it == samplers.end()) it = samplers.emplace(key, LinearExtensionSampler(included, reach)).first;
    const std::vector<int> order = it->second.sample(rng);

    const int k = static_cast<int>(order.size());
    std::vector<int> lengths(static_cast<std::size_t>(k));
    int action_seconds = 0;
    for (int& l : lengths) {
      l = seg_len(rng);
      action_seconds += l;
    }
    // gaps[0] leads, gaps[k] trails; inner gaps keep the post- and pre-window frames apart.
    std::vector<int> gaps(static_cast<std::size_t>(k + 1), 2);
    gaps.front() = 1;
    gaps.back() = 1;
    int min_null = 0;
    for (int g : gaps) min_null += g;
    const int target_null =
        static_cast<int>(std::lround(action_seconds * spec.null_fraction / (1.0 - spec.null_fraction)));
    std::uniform_int_distribution<int> pick_gap(0, k);
    for (int extra = target_null - min_null; extra > 0; --extra) ++gaps[static_cast<std::size_t>(pick_gap(rng))];

    int T = 0;
    for (int g : gaps) T += g;
    T += action_seconds;

    MatrixXd frames(T, spec.feature_dim);
    frames.leftCols(ds).rowwise() = c.background_state.transpose();
    frames.rightCols(da).rowwise() = c.background_activity.transpose();

    VideoRecord video;
    char id[32];
    std::snprintf(id, sizeof id, "_v%03d", vi);
    video.video_id = spec.task_id + id;
    video.task_id = spec.task_id;
    std::vector<ActionId> sequence;
    int second = gaps[0] + 1;  // 1-based first second of the next action
    for (int i = 0; i < k; ++i) {
      const int a = order[static_cast<std::size_t>(i)];
      const int first = second, last = second + lengths[static_cast<std::size_t>(i)] - 1;
      // 0-based rows
      frames.block(first - 2, 0, 2, ds).rowwise() = c.pre.row(a);
      frames.block(last - 1, 0, 2, ds).rowwise() = c.post.row(a);
      for (int t = first + 1; t < last; ++t) frames.block(t - 1, 0, 1, ds) = 0.5 * (c.pre.row(a) + c.post.row(a));
      frames.block(first - 1, ds, last - first + 1, da).rowwise() = c.activity.row(a);

      const ActionId id_a{static_cast<std::uint32_t>(a + 1)};
      video.segments.push_back(Segment{id_a, first + jitter(rng), last + jitter(rng)});
      sequence.push_back(id_a);
      second = last + 1 + gaps[static_cast<std::size_t>(i + 1)];
    }
    if (spec.noise_sigma > 0) {
      for (Eigen::Index i = 0; i < frames.size(); ++i) frames.data()[i] += spec.noise_sigma * noise(rng);
    }
    video.features = frames.cast<float>();

    for (std::size_t i = 0; i + 1 < sequence.size(); ++i) out.successor_edges.insert({sequence[i], sequence[i + 1]});
    out.successor_edges.insert({sequence.back(), eos});
    out.sequences.push_back(std::move(sequence));
    out.data.videos.push_back(std::move(video));
  }
  return out;
}

}  // namespace adtg
