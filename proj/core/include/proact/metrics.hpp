// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Clip-level detection metrics. A clip fires at threshold H iff score >= H.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace proact {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const Counts&) const = default;
};

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
  bool precision_undefined = false;  // tp + fp == 0, reported as 0
  bool recall_undefined = false;     // tp + fn == 0, reported as 0
  bool operator==(const PRPoint&) const = default;
};

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

/// F1 from precision and recall, 0 when both are 0.
double f1_score(double precision, double recall);

/// Metrics from confusion counts with the 0/0 -> 0 convention.
PRPoint point_from_counts(const Counts& c, double threshold);

PRPoint pr_at_threshold(std::span<const ScoredLabel> scored, double threshold);

struct SweepResult {
  std::vector<PRPoint> curve;  // one point per unique score, ascending threshold
  double ap = 0.0;             // all-point interpolated area under the PR curve
  double ar = 0.0;             // mean recall over the curve thresholds
  PRPoint best;                // max F1, ties to the higher threshold
};

/// Throws MetricError unless both polarities are present.
SweepResult sweep(std::span<const ScoredLabel> scored);

}  // namespace proact
