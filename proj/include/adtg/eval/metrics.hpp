// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "adtg/corpus/types.hpp"
#include "adtg/guidance/guidance.hpp"

namespace adtg {

/// Fraction of positions where pred == gt. UsageError on a length mismatch
/// or empty input.
double accuracy(std::span<const ActionId> pred, std::span<const ActionId> gt);

/// Accuracy over positions whose ground truth is not NULL; nullopt when there
/// are none, so callers can leave the case out of averages.
std::optional<double> accuracy_excl_null(std::span<const ActionId> pred, std::span<const ActionId> gt);

struct LogLikPair {
  /// Mean log-probability of each step's predicted (argmax) action.
  double prediction = 0;
  /// Mean log-probability of the ground-truth action.
  double ground_truth = 0;
  std::size_t scored = 0;
  /// Steps whose ground truth was not a candidate.
  std::size_t skipped = 0;
};

/// UsageError on a length mismatch or when no step can be scored.
LogLikPair loglik_pair(std::span<const StepScores> steps, std::span<const ActionId> gt);

/// |set(pred) ∩ set(gt)| / |set(pred) ∪ set(gt)|; 1.0 when both are empty.
double miou(std::span<const ActionId> pred, std::span<const ActionId> gt);

}  // namespace adtg
