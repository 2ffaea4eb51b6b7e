// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Mini-batch training on the gated multi-task loss, threshold calibration.
//
// Each batch mixes positives and negatives at a fixed fraction. Per-clip
// gradients land in private buffers and are summed in batch order, so the
// result is bit-identical for any worker count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "proact/checkpoint.hpp"
#include "proact/clips.hpp"
#include "proact/evaluation.hpp"

namespace proact {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::int64_t steps = 4000;
  double learning_rate = 1e-3;
  std::int64_t warmup_steps = 100;
  double positive_fraction = 0.25;  // 1:3 positives to negatives
  std::uint64_t seed = 1;
  std::int64_t eval_every = 500;    // 0 disables periodic validation
  std::size_t val_clip_limit = 1200;
  std::size_t threads = 1;          // 0 = hardware concurrency
  std::size_t negative_stride = 5;
  std::size_t jitter = 0;
  double null_action_weight = 1.0;
  bool final_frame_only = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
  std::int64_t step = 0;
  double total = 0.0, trigger = 0.0, action = 0.0, target = 0.0;
  double val_f1 = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
};

struct TrainResult {
  DecisionNetwork<float> network;
  std::vector<StepRecord> curve;
  bool diverged = false;
  std::string divergence;  // reason when diverged; network holds the last good parameters
  std::size_t positives = 0, negatives = 0;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Clips from `train` with the config's stride and jitter.
std::vector<Clip> training_clips(std::span<const Episode> train, const ModelConfig& model,
                                 const TrainConfig& cfg, std::size_t span_frames);

/// Trains from a fresh initialization seeded by cfg.seed.
TrainResult train(std::span<const Episode> train_episodes, std::span<const Clip> clips,
                  std::span<const Episode> val_episodes, std::span<const Clip> val_clips,
                  const ActionCodebook& codebook, const UtteranceEmbedder& embedder,
                  const ModelConfig& model, const TrainConfig& cfg, const StepCallback& on_step = {});

/// Continues training `network` in place (used by train and by tests).
TrainResult train_network(DecisionNetwork<float> network, std::span<const Episode> train_episodes,
                          std::span<const Clip> clips, std::span<const Episode> val_episodes,
                          std::span<const Clip> val_clips, const ActionCodebook& codebook,
                          const UtteranceEmbedder& embedder, const TrainConfig& cfg,
                          const StepCallback& on_step = {});

std::string loss_curve_to_csv(const std::vector<StepRecord>& curve);

/// H_trigger from the max-F1 point of the trigger sweep over all clips and
/// H_target from the token-level sweep over positive clips. Targets pass on a
/// strict score > H_target, so the stored value sits one ulp below the chosen
/// score. Throws CalibrationError on a single polarity or constant scores.
Thresholds calibrate_thresholds(std::span<const ScoredClip> validation);

}  // namespace proact
