// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Clip-level evaluation of a policy over every windowed clip of a split.
//
// Per-mode clip scores for the threshold sweep:
//   trigger-only   y_hat
//   actor-only     1 - p(NULL)
//   trigger-actor  y_hat when argmax is not NULL, else 0
// The operating point applies the exact firing rule of each mode with
// deterministic (argmax) action selection.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "proact/checkpoint.hpp"
#include "proact/clips.hpp"
#include "proact/inference_engine.hpp"
#include "proact/metrics.hpp"

namespace proact {

struct ScoredClip {
  std::string id;
  std::string source;
  bool positive = false;
  double trigger = 0.0;            // y_hat at the final frame
  double null_probability = 0.0;
  std::size_t action_argmax = 0;   // over K + 1, NULL included
  std::size_t action_non_null = 0; // over the K real actions
  int true_action = -1;            // positives only
  std::vector<ScoredLabel> targets;  // final-frame person tokens of positives
  bool warm_up = false;
};

std::vector<ScoredClip> score_clips(const Policy& policy, std::span<const Episode> episodes,
                                    std::span<const Clip> clips, std::size_t threads = 1);

double mode_score(const ScoredClip& clip, InferenceMode mode, std::size_t null_index);
bool mode_fires(const ScoredClip& clip, InferenceMode mode, std::size_t null_index, double h_trigger);

struct GroupReport {
  std::string source;  // "all" for the pooled group
  std::size_t clips = 0, positives = 0;
  PRPoint operating;   // at the calibrated threshold
  bool sweep_defined = false;  // both polarities present
  double ap = 0.0, ar = 0.0;
  PRPoint best;        // max-F1 point of the sweep
  double action_top1 = 0.0;  // on true positives, non-NULL argmax
  std::size_t action_support = 0;
  PRPoint target;      // token-level at H_target over positive clips
  double target_accuracy = 0.0;
  std::size_t target_tokens = 0;
};

struct MetricsReport {
  InferenceMode mode = InferenceMode::kTriggerOnly;
  Thresholds thresholds;
  std::vector<GroupReport> groups;  // "all" first, then sources in name order
  std::vector<PRPoint> curve;       // pooled sweep, ascending threshold
};

MetricsReport build_report(std::span<const ScoredClip> scored, const Thresholds& thresholds,
                           InferenceMode mode, std::size_t null_index);

/// Scores every windowed clip (stride 1, no negative subsampling).
MetricsReport evaluate_checkpoint(const Policy& policy, std::span<const Episode> episodes,
                                  InferenceMode mode, std::size_t span_frames, std::size_t threads = 1);

std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
std::string pr_curve_to_csv(const std::vector<PRPoint>& curve);

}  // namespace proact
