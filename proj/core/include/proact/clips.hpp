// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Supervised clips cut from annotated episodes.
//
// A positive clip ends at an annotation's trigger frame (plus optional
// non-negative jitter). A negative clip is any window that does not touch an
// interaction span [trigger, trigger + span - 1], sampled every `stride`
// end frames. Windows that contain part of a span without ending on a
// trigger are neither.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proact/action_codebook.hpp"
#include "proact/decision_model.hpp"
#include "proact/episode.hpp"

namespace proact {

struct Clip {
  std::size_t episode = 0;  // index into the episode list
  std::size_t end = 0;      // position of the newest frame in episode.frames
  bool positive = false;
  int annotation = -1;      // index into episode.annotations for positives
  std::size_t jitter = 0;   // frames past the trigger

  bool operator==(const Clip&) const = default;
};

struct ClipOptions {
  std::size_t n = 10;     // window frames
  std::size_t span = 6;   // interaction span in frames
  std::size_t stride = 5; // negative end-frame stride
  std::size_t jitter = 0; // max frames a positive window may extend past its trigger
  bool include_warm_up = true;
  std::uint64_t seed = 0; // jitter draws
};

std::vector<Clip> make_clips(std::span<const Episode> episodes, const ClipOptions& options);

/// [first, last] frame positions covered by the window ending at `end`.
std::pair<std::size_t, std::size_t> window_extent(std::size_t end, std::size_t n);

ClipWindow clip_window(const Episode& episode, const Clip& clip, std::size_t m, std::size_t n);

/// Per-frame labels: y = 1 on frames at or after the trigger within a
/// positive clip; targets flagged on eligible (person) tokens of those frames.
ClipLabels label_clip(const Episode& episode, const Clip& clip, const ClipWindow& window,
                      const ActionCodebook& codebook);

std::string clip_id(const Episode& episode, const Clip& clip);

}  // namespace proact
