// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Annotated episodes and their on-disk formats: one JSON object per frame
// (episode JSONL) and the dataset manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proact/action_codebook.hpp"
#include "proact/token_stream.hpp"

namespace proact {

struct Annotation {
  std::int64_t frame_idx = 0;
  std::vector<std::uint32_t> target_track_ids;
  MultiModalAction action;

  bool operator==(const Annotation&) const = default;
};

struct Episode {
  std::string id;
  std::string source;  // lobby tag, e.g. "A-lobby"
  std::vector<FramePacket> frames;
  std::vector<Annotation> annotations;  // ascending frame_idx

  /// Position of frame_idx in `frames`, or nullopt.
  std::optional<std::size_t> position_of(std::int64_t frame_idx) const;
};

/// One frame line. Floats are written rounded to 4 decimals.
std::string frame_to_json_line(const FramePacket& frame, const Annotation* annotation);

struct ParsedFrame {
  FramePacket frame;
  std::optional<Annotation> annotation;
};

/// Throws InputError on malformed JSON or fields.
ParsedFrame parse_frame_line(std::string_view line);

void write_episode(const Episode& episode, std::ostream& out);
std::string episode_to_string(const Episode& episode);
/// Reads frames in order; all lines must share one episode_id.
Episode read_episode(const std::filesystem::path& path, const std::string& source = "");

struct ManifestEntry {
  std::string id;
  std::string file;  // relative to the manifest directory
  std::string source;
  std::size_t frames = 0;
  std::size_t positives = 0;
  std::uint64_t seed = 0;
};

struct Manifest {
  int version = 1;
  std::uint64_t master_seed = 0;
  std::string sim_config;  // serialized SimConfig (key=value lines)
  std::vector<MultiModalAction> action_catalog;
  std::map<std::string, std::vector<ManifestEntry>> splits;  // train / val / test
  std::filesystem::path directory;  // set on load

  std::size_t positives(const std::string& split) const;
  const std::vector<ManifestEntry>& split(const std::string& name) const;
};

std::string manifest_to_string(const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);
std::vector<Episode> load_split(const Manifest& manifest, const std::string& split);

/// Writes to a sibling temp file and renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace proact
