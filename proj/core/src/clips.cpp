// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/clips.hpp"

#include <algorithm>
#include <random>

#include "proact/errors.hpp"

namespace proact {

std::pair<std::size_t, std::size_t> window_extent(std::size_t end, std::size_t n) {
  return {end + 1 >= n ? end + 1 - n : 0, end};
}

std::vector<Clip> make_clips(std::span<const Episode> episodes, const ClipOptions& opt) {
  if (opt.n == 0 || opt.stride == 0 || opt.span == 0) throw ConfigError("clip n, stride and span must be >= 1");
  std::mt19937_64 rng(opt.seed);
  std::vector<Clip> clips;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (ep.frames.empty()) throw InputError("episode '" + ep.id + "' has no frames");
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t a = 0; a < ep.annotations.size(); ++a) {
      const auto pos = ep.position_of(ep.annotations[a].frame_idx);
      if (!pos)
        throw LabelError("annotation at frame " + std::to_string(ep.annotations[a].frame_idx) +
                         " missing from episode '" + ep.id + "'");
      spans.emplace_back(*pos, *pos + opt.span - 1);
      std::size_t j = opt.jitter ? static_cast<std::size_t>(rng() % (opt.jitter + 1)) : 0;
      j = std::min(j, ep.frames.size() - 1 - *pos);
      clips.push_back({e, *pos + j, true, static_cast<int>(a), j});
    }
    for (std::size_t end = 0; end < ep.frames.size(); end += opt.stride) {
      if (!opt.include_warm_up && end + 1 < opt.n) continue;
      const auto [first, last] = window_extent(end, opt.n);
      const bool touches = std::any_of(spans.begin(), spans.end(), [&, first = first, last = last](const auto& s) {
        return first <= s.second && s.first <= last;
      });
      if (!touches) clips.push_back({e, end, false, -1, 0});
    }
  }
  return clips;
}

ClipWindow clip_window(const Episode& episode, const Clip& clip, std::size_t m, std::size_t n) {
  return window_at(episode.frames, clip.end, m, n);
}

ClipLabels label_clip(const Episode& episode, const Clip& clip, const ClipWindow& w,
                      const ActionCodebook& codebook) {
  ClipLabels l;
  const std::size_t frames = w.n, m = w.m;
  l.trigger.assign(frames, 0);
  l.action.assign(frames, codebook.null_index());
  l.target.assign(frames * m, 0);
  l.target_eligible.assign(frames * m, false);
  const Annotation* a = nullptr;
  if (clip.positive) {
    if (clip.annotation < 0 || static_cast<std::size_t>(clip.annotation) >= episode.annotations.size())
      throw LabelError("positive clip without an annotation in '" + episode.id + "'");
    a = &episode.annotations[static_cast<std::size_t>(clip.annotation)];
  }
  for (std::size_t f = 0; f < frames; ++f) {
    const auto src = w.source_frames[f];
    const bool on = a && src >= 0 && src >= a->frame_idx;
    if (!on) continue;
    l.trigger[f] = 1;
    l.action[f] = codebook.index_of(a->action);
    for (std::size_t s = 0; s < m; ++s) {
      const auto& o = w.at(f, s);
      if (!o.is_person()) continue;
      l.target_eligible[f * m + s] = true;
      l.target[f * m + s] =
          std::find(a->target_track_ids.begin(), a->target_track_ids.end(), o.track_id) != a->target_track_ids.end();
    }
  }
  return l;
}

std::string clip_id(const Episode& episode, const Clip& clip) {
  return episode.id + "@" + std::to_string(episode.frames[clip.end].frame_idx);
}

}  // namespace proact
