// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/inference_engine.hpp"

#include <climits>
#include <cmath>
#include <json.hpp>

#include "proact/errors.hpp"

namespace proact {

std::string_view to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::kTriggerOnly: return "trigger-only";
    case InferenceMode::kActorOnly: return "actor-only";
    case InferenceMode::kTriggerActor: return "trigger-actor";
  }
  return "?";
}

InferenceMode inference_mode_from_string(std::string_view name) {
  for (auto m : {InferenceMode::kTriggerOnly, InferenceMode::kActorOnly, InferenceMode::kTriggerActor})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown inference mode '" + std::string(name) +
                    "' (expected trigger-only, actor-only or trigger-actor)");
}

std::string_view to_string(StepEvent event) {
  switch (event) {
    case StepEvent::kIdle: return "idle";
    case StepEvent::kWarmUp: return "warm-up";
    case StepEvent::kRefractory: return "refractory";
    case StepEvent::kNoTarget: return "trigger-without-target";
    case StepEvent::kNullOnly: return "null-only";
    case StepEvent::kCommand: return "command";
  }
  return "?";
}

std::string command_to_json(const InitiationCommand& c) {
  nlohmann::ordered_json j;
  j["episode_id"] = c.episode_id;
  j["frame_idx"] = c.frame_idx;
  j["action"] = {{"utterance", c.action.utterance},
                 {"expression_id", c.action.expression_id},
                 {"motion_id", c.action.motion_id}};
  j["action_index"] = c.action_index;
  j["target_track_ids"] = c.target_track_ids;
  j["centroid"] = {c.centroid_x, c.centroid_y};
  j["trigger_score"] = c.trigger_score;
  j["action_probability"] = c.action_probability;
  return j.dump();
}

namespace {

void check_distribution(std::span<const double> p, bool exclude_null) {
  if (p.size() < (exclude_null ? 2u : 1u)) throw SamplingError("action distribution is too short");
  for (double x : p)
    if (!std::isfinite(x) || x < 0.0) throw SamplingError("action distribution has a negative or non-finite entry");
}

}  // namespace

std::size_t sample_action(std::span<const double> p, bool exclude_null, double u) {
  check_distribution(p, exclude_null);
  const std::size_t n = exclude_null ? p.size() - 1 : p.size();
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += p[k];
  if (!(total > 0.0)) throw SamplingError(exclude_null ? "all action mass is on NULL" : "action distribution sums to 0");
  const double target = u * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (p[k] <= 0.0) continue;
    cum += p[k];
    last_positive = k;
    if (target < cum) return k;
  }
  return last_positive;
}

std::size_t sample_action(std::span<const double> p, bool exclude_null, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return sample_action(p, exclude_null, u);
}

std::size_t argmax_action(std::span<const double> p, bool exclude_null) {
  check_distribution(p, exclude_null);
  const std::size_t n = exclude_null ? p.size() - 1 : p.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

ModeDecision decide(InferenceMode mode, double trigger, std::span<const double> p, double h, bool deterministic,
                    double u) {
  ModeDecision d;
  const std::size_t null = p.size() - 1;
  const bool trigger_ok = trigger >= h;
  if (mode == InferenceMode::kTriggerOnly) {
    d.action = null;
    if (!trigger_ok) return d;
    try {
      d.action = deterministic ? argmax_action(p, true) : sample_action(p, true, u);
      d.fired = true;
    } catch (const SamplingError&) {
      d.null_only = true;
    }
    return d;
  }
  d.action = deterministic ? argmax_action(p, false) : sample_action(p, false, u);
  d.fired = d.action != null && (mode == InferenceMode::kActorOnly || trigger_ok);
  return d;
}

std::vector<DetectedObject> filter_targets(std::span<const DetectedObject> tokens,
                                           std::span<const double> scores, double h) {
  if (tokens.size() != scores.size()) throw DimensionError("target scores are not aligned with tokens");
  std::vector<DetectedObject> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].is_person() && scores[i] > h) out.push_back(tokens[i]);
  return out;
}

std::pair<double, double> compute_centroid(std::span<const DetectedObject> targets) {
  if (targets.empty()) throw InputError("centroid of an empty target list");
  double x = 0.0, y = 0.0;
  for (const auto& t : targets) {
    x += t.bbox.cx;
    y += t.bbox.cy;
  }
  const auto n = static_cast<double>(targets.size());
  return {x / n, y / n};
}

InferenceEngine::InferenceEngine(std::shared_ptr<const Policy> policy, EngineConfig cfg)
    : policy_(std::move(policy)),
      cfg_(cfg),
      buffer_(policy_ ? policy_->config().m : 1, policy_ ? policy_->config().n : 1),
      rng_(cfg.seed) {
  if (!policy_) throw ConfigError("inference engine needs a policy");
  if (!policy_->thresholds().calibrated)
    throw ConfigError("inference engine needs calibrated thresholds; run train with a validation split");
}

void InferenceEngine::reset() {
  buffer_.reset();
  rng_.seed(cfg_.seed);
  refractory_until_ = INT64_MIN;
}

StepResult InferenceEngine::step(const FramePacket& packet) {
  const ClipWindow w = buffer_.push(packet);
  // One uniform per frame regardless of mode, so engines sharing a seed stay aligned.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  StepResult r;
  if (w.warm_up && cfg_.suppress_warm_up) {
    r.event = StepEvent::kWarmUp;
    return r;
  }
  const auto pred = policy_->predict(w);
  const auto& th = policy_->thresholds();
  std::vector<double> p(static_cast<std::size_t>(pred.action_dist.size()));
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = pred.action_dist[static_cast<Eigen::Index>(k)];
  const std::size_t null = p.size() - 1;
  r.trigger_score = pred.trigger;
  const ModeDecision d = decide(cfg_.mode, r.trigger_score, p, th.trigger, cfg_.deterministic, u);
  r.fired = d.fired;
  r.action_index = d.action;
  if (d.null_only) {
    r.event = StepEvent::kNullOnly;
    return r;
  }
  if (!r.fired) return r;

  if (packet.frame_idx < refractory_until_) {
    r.event = StepEvent::kRefractory;
    return r;
  }
  const std::size_t m = w.m;
  std::span<const DetectedObject> last(w.objects.data() + (w.n - 1) * m, m);
  std::vector<double> scores(m);
  for (std::size_t s = 0; s < m; ++s) scores[s] = pred.target[static_cast<Eigen::Index>(s)];
  const auto targets = filter_targets(last, scores, th.target);
  if (targets.empty()) {
    r.event = StepEvent::kNoTarget;
    return r;
  }
  InitiationCommand cmd;
  cmd.episode_id = packet.episode_id;
  cmd.frame_idx = packet.frame_idx;
  cmd.action_index = r.action_index;
  cmd.action = policy_->codebook().at(r.action_index);
  for (const auto& t : targets) cmd.target_track_ids.push_back(t.track_id);
  std::tie(cmd.centroid_x, cmd.centroid_y) = compute_centroid(targets);
  cmd.trigger_score = r.trigger_score;
  cmd.action_probability = p[r.action_index];
  if (cfg_.mode == InferenceMode::kTriggerOnly) {
    double non_null = 0.0;
    for (std::size_t k = 0; k < null; ++k) non_null += p[k];
    cmd.action_probability /= non_null;
  }
  refractory_until_ = packet.frame_idx + static_cast<std::int64_t>(cfg_.refractory_frames);
  r.command = std::move(cmd);
  r.event = StepEvent::kCommand;
  return r;
}

}  // namespace proact
