// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Random fixtures shared by the model-level tests.

#pragma once

#include <random>

#include "proact/decision_model.hpp"
#include "proact/scenario_sim.hpp"

namespace proact::testing {

inline DetectedObject random_object(std::mt19937_64& rng, std::size_t feature_dim, std::uint32_t id,
                                    bool allow_non_person = true) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::normal_distribution<float> g(0.0f, 1.0f);
  DetectedObject o;
  o.track_id = id;
  o.cls = allow_non_person ? static_cast<ObjectClass>(rng() % 3 == 0 ? 1 + rng() % 5 : 0)
                           : ObjectClass::kPerson;
  o.bbox = {u(rng), u(rng), 0.5 * u(rng), 0.5 * u(rng)};
  o.feature.resize(feature_dim);
  for (auto& v : o.feature) v = g(rng);
  return o;
}

/// Window with a random padding pattern; `pad_prob` per slot, never all padding
/// in the last frame.
inline ClipWindow random_window(std::mt19937_64& rng, std::size_t m, std::size_t n,
                                std::size_t feature_dim, double pad_prob = 0.3) {
  ClipWindow w;
  w.m = m;
  w.n = n;
  std::bernoulli_distribution pad(pad_prob);
  for (std::size_t f = 0; f < n; ++f) {
    w.frame_ids.push_back(static_cast<int>(f) + 1);
    w.source_frames.push_back(static_cast<std::int64_t>(f));
    for (std::size_t s = 0; s < m; ++s) {
      const bool p = pad(rng) && !(f + 1 == n && s == 0);
      w.objects.push_back(p ? DetectedObject::padding()
                            : random_object(rng, feature_dim, static_cast<std::uint32_t>(s)));
      w.pad_mask.push_back(p);
    }
  }
  return w;
}

/// Labels for a positive clip triggering at frame `trigger_frame` (or a negative
/// clip when it is negative), with random target flags on person tokens.
inline ClipLabels random_labels(std::mt19937_64& rng, const ClipWindow& w, int trigger_frame,
                                std::size_t action, std::size_t null_index) {
  ClipLabels l;
  for (std::size_t f = 0; f < w.n; ++f) {
    const bool on = trigger_frame >= 0 && static_cast<int>(f) >= trigger_frame;
    l.trigger.push_back(on ? 1 : 0);
    l.action.push_back(on ? action : null_index);
    for (std::size_t s = 0; s < w.m; ++s) {
      const auto& o = w.at(f, s);
      l.target_eligible.push_back(o.is_person());
      l.target.push_back(o.is_person() && rng() % 2 == 0 ? 1 : 0);
    }
  }
  return l;
}

inline ModelConfig small_config(std::size_t k = 5) {
  ModelConfig c;
  c.m = 4;
  c.n = 3;
  c.feature_dim = 6;
  c.position_dim = 4;
  c.class_dim = 3;
  c.position_bins = 4;
  c.d_model = 16;
  c.blocks = 2;
  c.heads = 2;
  c.ffn_mult = 2;
  c.num_actions = k;
  c.utterance_dim = 8;
  c.expression_vocab = 8;
  c.motion_vocab = 8;
  c.expression_dim = 3;
  c.motion_dim = 3;
  return c;
}

inline ActionCodebook random_codebook(std::size_t k) {
  std::vector<MultiModalAction> acts;
  const char* words[] = {"hello", "there", "pose", "help", "luggage", "friend", "morning", "places"};
  for (std::size_t i = 0; i < k; ++i)
    acts.push_back({std::string(words[i % 8]) + " " + words[(i * 3 + 1) % 8] + " " + std::to_string(i),
                    static_cast<int>(i % 8), static_cast<int>((i * 5) % 8)});
  return ActionCodebook::from_actions(acts);
}

/// Simulator matching small_config: F = 6, three-frame windows.
inline SimConfig tiny_sim() {
  SimConfig c;
  c.feature_dim = 6;
  c.clip_seconds = 1.5;
  return c;
}

inline std::vector<Episode> tiny_episodes(std::size_t count, std::uint64_t seed,
                                          const SimConfig& cfg = tiny_sim()) {
  std::vector<Episode> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(generate_episode(cfg, episode_seed(seed, i), "ep-" + std::to_string(i)).episode);
  return out;
}

/// small_config with vocabularies wide enough for the simulator's catalog.
inline ModelConfig tiny_model(std::size_t k) {
  ModelConfig c = small_config(k);
  c.expression_vocab = 16;
  c.motion_vocab = 16;
  return c;
}

}  // namespace proact::testing
