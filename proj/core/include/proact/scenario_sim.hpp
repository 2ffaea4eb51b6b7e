// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic lobby episodes with ground-truth triggers, targets and actions.
//
// Each person carries a feature vector built from three parts:
//   intent prototype + motion-phase component + Gaussian noise.
// The phase component is a gait oscillation while walking, zero while
// standing, an engagement signature during the interaction span that starts
// at the trigger frame, and a departure signature afterwards. Companion
// objects (phone, suitcase, bags) mix their class prototype with half of the
// owner's intent prototype. Prototypes come from `world_seed`, so every
// split shares them.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proact/episode.hpp"

namespace proact {

enum class Intent : std::uint8_t {
  kPassBy = 0,
  kApproachRobot,
  kPhotoTaking,
  kHesitateLookaround,
  kGroupWalk,
  kPhoneCall,
  kLuggageCarry,
  kChildGreet,
};

inline constexpr int kNumIntents = 8;

std::string_view to_string(Intent intent);
Intent intent_from_string(std::string_view name);

struct SimConfig {
  std::uint64_t seed = 7;  // master seed
  std::uint64_t world_seed = 20260101;
  int fps = 2;
  double episode_seconds = 20.0;
  double clip_seconds = 5.0;
  double interaction_seconds = 3.0;
  int max_pedestrians = 6;
  std::size_t feature_dim = 64;
  std::vector<Intent> intents = {Intent::kPassBy,    Intent::kApproachRobot, Intent::kPhotoTaking,
                                 Intent::kHesitateLookaround, Intent::kGroupWalk,
                                 Intent::kPhoneCall, Intent::kLuggageCarry, Intent::kChildGreet};
  double noise = 0.35;
  double second_lobby_noise_scale = 1.25;  // "B-lobby" episodes are noisier
  double second_primary_prob = 0.35;

  void validate() const;
  int episode_frames() const;
  /// Frames per clip window; must equal the model's N.
  int window_frames() const;
  int span_frames() const;
  bool operator==(const SimConfig&) const = default;
};

/// Ground truth the episode files do not carry.
struct SimTruth {
  std::map<std::uint32_t, Intent> intent;  // every track, companions included
  std::map<std::uint32_t, bool> is_person;
  Intent primary = Intent::kPassBy;
};

struct SimEpisode {
  Episode episode;
  SimTruth truth;
};

/// Fixed intent -> action table; every utterance is distinct.
const std::map<Intent, MultiModalAction>& intent_action_table();
/// Table rows in intent order.
std::vector<MultiModalAction> action_catalog();

SimEpisode generate_episode(const SimConfig& cfg, std::uint64_t episode_seed, const std::string& episode_id);

/// Per-episode seed derived from the master seed.
std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

/// Generates `n_episodes` episodes into out_dir/episodes/ and writes
/// out_dir/manifest.json. Consecutive index ranges form the splits, so seeds
/// are disjoint across splits.
Manifest generate_dataset(const SimConfig& cfg, std::size_t n_episodes, const SplitRatios& ratios,
                          const std::filesystem::path& out_dir);

/// Episode counts per split for `n` episodes.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& ratios);

std::string sim_config_to_string(const SimConfig& cfg);

/// Multinomial ridge-regression probe: train on (features, intents), report
/// accuracy on a held-out part. Used to certify feature separability.
struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t samples = 0;
};
ProbeResult linear_intent_probe(const SimConfig& cfg, std::size_t n_objects, std::uint64_t seed);

}  // namespace proact
