// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Self-describing checkpoint file and the frozen policy built from it.
//
// Layout (all integers little-endian):
//   8 bytes   magic "PROACTCK"
//   u32       format version
//   u64       metadata length L
//   L bytes   metadata JSON (model config, codebook, embedder, thresholds,
//             training metadata, tensor directory)
//   tensors   float32, row-major, in directory order
//   u32       CRC-32 of every preceding byte

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "proact/action_codebook.hpp"
#include "proact/decision_model.hpp"

namespace proact {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "PROACTCK";

struct Thresholds {
  double trigger = 0.5;
  double target = 0.5;
  bool calibrated = false;  // trigger threshold came from a validation sweep
  bool operator==(const Thresholds&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  ParamStore<float> params;
  ActionCodebook codebook;
  std::string embedder_id = "hashed-bag-fnv1a64";
  std::size_t embedder_dim = 64;
  Thresholds thresholds;
  std::map<std::string, std::string> training;  // free-form, deterministic metadata
};

Checkpoint make_checkpoint(const DecisionNetwork<float>& net, const ActionCodebook& codebook,
                           const UtteranceEmbedder& embedder, const Thresholds& thresholds,
                           std::map<std::string, std::string> training = {});

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on any defect; nothing is returned from a bad file.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(std::string_view text);

/// Frozen network plus everything needed to score windows. Action encodings
/// are computed once at construction.
class Policy {
 public:
  explicit Policy(const Checkpoint& ckpt);
  Policy(DecisionNetwork<float> net, ActionCodebook codebook,
         std::shared_ptr<const UtteranceEmbedder> embedder, Thresholds thresholds);

  const ModelConfig& config() const { return net_.config(); }
  const ActionCodebook& codebook() const { return codebook_; }
  const UtteranceEmbedder& embedder() const { return *embedder_; }
  const DecisionNetwork<float>& network() const { return net_; }
  const Thresholds& thresholds() const { return thresholds_; }
  void set_thresholds(const Thresholds& t) { thresholds_ = t; }
  const Tensor<float>& action_encodings() const { return phi_; }

  DecisionOutput<float> forward(const ClipWindow& window) const;
  FramePrediction<float> predict(const ClipWindow& window) const;

  Checkpoint to_checkpoint(std::map<std::string, std::string> training = {}) const;

 private:
  DecisionNetwork<float> net_;
  ActionCodebook codebook_;
  std::shared_ptr<const UtteranceEmbedder> embedder_;
  Thresholds thresholds_;
  Tensor<float> phi_;
};

}  // namespace proact
