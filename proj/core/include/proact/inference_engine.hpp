// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Streaming decision layer: one engine per stream, strictly sequential
// step() calls, shared frozen policy.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proact/checkpoint.hpp"
#include "proact/token_stream.hpp"

namespace proact {

enum class InferenceMode { kTriggerOnly, kActorOnly, kTriggerActor };

std::string_view to_string(InferenceMode mode);
InferenceMode inference_mode_from_string(std::string_view name);

struct InitiationCommand {
  std::string episode_id;
  std::int64_t frame_idx = 0;
  MultiModalAction action;
  std::size_t action_index = 0;
  std::vector<std::uint32_t> target_track_ids;
  double centroid_x = 0.0, centroid_y = 0.0;
  double trigger_score = 0.0;
  double action_probability = 0.0;
};

std::string command_to_json(const InitiationCommand& cmd);

struct EngineConfig {
  InferenceMode mode = InferenceMode::kTriggerActor;
  std::size_t refractory_frames = 6;  // 3 s at 2 fps
  bool suppress_warm_up = false;
  bool deterministic = false;  // argmax instead of weighted sampling
  std::uint64_t seed = 0;
};

enum class StepEvent {
  kIdle,           // firing condition not met
  kWarmUp,         // suppressed warm-up window
  kRefractory,     // condition met but inside the refractory span
  kNoTarget,       // condition met, no person cleared H_target
  kNullOnly,       // TriggerOnly fired but all action mass is on NULL
  kCommand,        // command emitted
};

std::string_view to_string(StepEvent event);

struct StepResult {
  StepEvent event = StepEvent::kIdle;
  bool fired = false;          // mode's firing condition, before gating
  double trigger_score = 0.0;
  std::size_t action_index = 0;  // selected action (may be NULL)
  std::optional<InitiationCommand> command;
};

/// Draws an index proportionally to p using the single uniform u in [0, 1).
/// With exclude_null the last entry is dropped and the rest renormalized.
std::size_t sample_action(std::span<const double> p, bool exclude_null, double u);
std::size_t sample_action(std::span<const double> p, bool exclude_null, std::mt19937_64& rng);

/// Index of the largest entry (first on ties), optionally skipping NULL.
std::size_t argmax_action(std::span<const double> p, bool exclude_null);

struct ModeDecision {
  bool fired = false;
  bool null_only = false;  // TriggerOnly condition met but no non-NULL mass
  std::size_t action = 0;
};

/// Firing rule of one mode for a single frame. `u` is the frame's uniform
/// draw, ignored in deterministic mode.
ModeDecision decide(InferenceMode mode, double trigger, std::span<const double> p, double h_trigger,
                    bool deterministic, double u);

/// Persons with score > h, in input order; padding and other classes never pass.
std::vector<DetectedObject> filter_targets(std::span<const DetectedObject> tokens,
                                           std::span<const double> scores, double h);

/// Mean bbox center; throws InputError on an empty list.
std::pair<double, double> compute_centroid(std::span<const DetectedObject> targets);

class InferenceEngine {
 public:
  InferenceEngine(std::shared_ptr<const Policy> policy, EngineConfig cfg);

  StepResult step(const FramePacket& packet);
  void reset();

  const EngineConfig& config() const { return cfg_; }
  std::int64_t refractory_until() const { return refractory_until_; }

 private:
  std::shared_ptr<const Policy> policy_;
  EngineConfig cfg_;
  FrameRingBuffer buffer_;
  std::mt19937_64 rng_;
  std::int64_t refractory_until_ = INT64_MIN;
};

}  // namespace proact
