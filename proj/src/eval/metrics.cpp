// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include "adtg/eval/metrics.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "adtg/error.hpp"

namespace adtg {

namespace {

void check_lengths(std::size_t pred, std::size_t gt) {
  if (pred != gt) {
    throw UsageError("prediction has " + std::to_string(pred) + " entries, ground truth " + std::to_string(gt));
  }
}

}  // namespace

double accuracy(std::span<const ActionId> pred, std::span<const ActionId> gt) {
  check_lengths(pred.size(), gt.size());
  if (gt.empty()) throw UsageError("accuracy of an empty sequence");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += pred[i] == gt[i];
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

std::optional<double> accuracy_excl_null(std::span<const ActionId> pred, std::span<const ActionId> gt) {
  check_lengths(pred.size(), gt.size());
  std::size_t hits = 0, n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kNullAction) continue;
    ++n;
    hits += pred[i] == gt[i];
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(n);
}

LogLikPair loglik_pair(std::span<const StepScores> steps, std::span<const ActionId> gt) {
  check_lengths(steps.size(), gt.size());
  LogLikPair out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepScores& s = steps[i];
    if (static_cast<std::size_t>(s.log_probs.size()) != s.candidates.size()) {
      throw UsageError("step " + std::to_string(i) + " has mismatched candidates and log-probabilities");
    }
    const auto g = std::find(s.candidates.begin(), s.candidates.end(), gt[i]);
    const auto p = std::find(s.candidates.begin(), s.candidates.end(), s.action);
    if (g == s.candidates.end() || p == s.candidates.end()) {
      ++out.skipped;
      continue;
    }
    out.prediction += s.log_probs(p - s.candidates.begin());
    out.ground_truth += s.log_probs(g - s.candidates.begin());
    ++out.scored;
  }
  if (out.scored == 0) throw UsageError("no step has its ground truth among the candidates");
  out.prediction /= static_cast<double>(out.scored);
  out.ground_truth /= static_cast<double>(out.scored);
  return out;
}

double miou(std::span<const ActionId> pred, std::span<const ActionId> gt) {
  const std::set<ActionId> p(pred.begin(), pred.end()), g(gt.begin(), gt.end());
  if (p.empty() && g.empty()) return 1.0;
  std::size_t inter = 0;
  for (ActionId a : p) inter += g.count(a);
  return static_cast<double>(inter) / static_cast<double>(p.size() + g.size() - inter);
}

}  // namespace adtg
