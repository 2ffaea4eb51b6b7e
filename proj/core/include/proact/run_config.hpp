// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Resolved run configuration: defaults <- config file <- command line.
//
// File format: one `key = value` per line, `#` starts a comment, blank lines
// ignored. Keys are namespaced (sim., data., model., train., infer., eval.).
// Every key is listed with its current value by `--print-config`.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "proact/decision_model.hpp"
#include "proact/inference_engine.hpp"
#include "proact/scenario_sim.hpp"
#include "proact/trainer.hpp"

namespace proact {

struct RunConfig {
  SimConfig sim;
  std::size_t episodes = 2000;
  SplitRatios split;
  ModelConfig model;
  TrainConfig train;
  EngineConfig infer;
  bool infer_strict = false;
  InferenceMode eval_mode = InferenceMode::kTriggerOnly;
  std::size_t eval_threads = 1;
};

class ConfigResolver {
 public:
  ConfigResolver();

  RunConfig& config() { return cfg_; }
  const RunConfig& config() const { return cfg_; }

  /// Sets one key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value, const std::string& origin);
  /// "key=value" as given on the command line.
  void set_assignment(std::string_view assignment, const std::string& origin);
  void apply_text(std::string_view text, const std::string& origin);
  void apply_file(const std::filesystem::path& path);
  /// Sets the seeds of every stage.
  void set_seed(std::uint64_t seed, const std::string& origin);

  std::string get(std::string_view key) const;
  std::vector<std::string> keys() const;
  const std::string& provenance(std::string_view key) const;

  /// `key = value  # origin` for every key, sorted.
  std::string dump(bool with_provenance = true) const;

 private:
  struct Entry {
    std::string help;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
  };
  RunConfig cfg_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::map<std::string, std::string, std::less<>> origin_;
};

}  // namespace proact
