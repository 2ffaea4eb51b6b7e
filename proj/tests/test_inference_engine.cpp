// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <random>
#include <set>

#include "proact/errors.hpp"
#include "proact/inference_engine.hpp"
#include "support.hpp"

namespace proact {
namespace {

using testing::tiny_episodes;
using testing::tiny_model;

DetectedObject obj(ObjectClass cls, std::uint32_t id, double cx, double cy) {
  DetectedObject o;
  o.cls = cls;
  o.track_id = id;
  o.bbox = {cx, cy, 0.1, 0.2};
  o.feature.assign(6, 0.0f);
  return o;
}

TEST(SampleAction, OneHotAndRenormalization) {
  std::mt19937_64 rng(1);
  const std::vector<double> one_hot = {0.0, 0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_action(one_hot, false, rng), 2u);
  const std::vector<double> half_null = {0.5, 0.5};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_action(half_null, true, rng), 0u);
  const std::vector<double> all_null = {0.0, 0.0, 1.0};
  EXPECT_THROW(sample_action(all_null, true, rng), SamplingError);
  EXPECT_THROW(sample_action(std::vector<double>{0.5, -0.1, 0.6}, false, rng), SamplingError);
  EXPECT_THROW(sample_action(std::vector<double>{NAN, 1.0}, false, rng), SamplingError);
}

TEST(SampleAction, FrequenciesMatchDistribution) {
  std::mt19937_64 rng(2);
  const std::vector<double> p = {0.25, 0.25, 0.25, 0.25};
  std::vector<int> counts(4);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[sample_action(p, false, rng)];
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int c : counts) EXPECT_LE(std::abs(c - draws * 0.25), 3 * sigma);

  // Excluding NULL renormalizes the remaining mass.
  const std::vector<double> q = {0.1, 0.3, 0.6};
  std::vector<int> qc(3);
  for (int i = 0; i < draws; ++i) ++qc[sample_action(q, true, rng)];
  EXPECT_EQ(qc[2], 0);
  const double s2 = std::sqrt(draws * 0.25 * 0.75);
  EXPECT_LE(std::abs(qc[0] - draws * 0.25), 3 * s2);
}

TEST(SampleAction, ReproducibleAndInverseCdf) {
  std::mt19937_64 a(9), b(9);
  const std::vector<double> p = {0.2, 0.3, 0.5};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_action(p, false, a), sample_action(p, false, b));
  EXPECT_EQ(sample_action(p, false, 0.0), 0u);
  EXPECT_EQ(sample_action(p, false, 0.19), 0u);
  EXPECT_EQ(sample_action(p, false, 0.21), 1u);
  EXPECT_EQ(sample_action(p, false, 0.99), 2u);
  EXPECT_EQ(argmax_action(p, false), 2u);
  EXPECT_EQ(argmax_action(p, true), 1u);
}

TEST(Decide, ModeExamples) {
  const std::vector<double> p = {0.3, 0.1, 0.6};  // NULL last
  // TriggerOnly: y = 0.9 > H, action drawn without NULL.
  auto d = decide(InferenceMode::kTriggerOnly, 0.9, p, 0.5, false, 0.99);
  EXPECT_TRUE(d.fired);
  EXPECT_EQ(d.action, 1u);
  EXPECT_FALSE(decide(InferenceMode::kTriggerOnly, 0.4, p, 0.5, false, 0.1).fired);
  // TriggerActor: y fires but the draw lands on NULL.
  d = decide(InferenceMode::kTriggerActor, 0.9, p, 0.5, false, 0.9);
  EXPECT_FALSE(d.fired);
  EXPECT_EQ(d.action, 2u);
  EXPECT_TRUE(decide(InferenceMode::kTriggerActor, 0.9, p, 0.5, false, 0.1).fired);
  // ActorOnly ignores y.
  EXPECT_TRUE(decide(InferenceMode::kActorOnly, 0.01, p, 0.5, false, 0.1).fired);
  EXPECT_FALSE(decide(InferenceMode::kActorOnly, 0.99, p, 0.5, true, 0.1).fired);
  // All mass on NULL under TriggerOnly.
  d = decide(InferenceMode::kTriggerOnly, 0.9, std::vector<double>{0.0, 1.0}, 0.5, false, 0.3);
  EXPECT_FALSE(d.fired);
  EXPECT_TRUE(d.null_only);
}

TEST(Decide, ConjunctionHoldsPointwise) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    std::vector<double> p(5);
    double s = 0.0;
    for (auto& x : p) s += (x = u(rng) * u(rng));
    for (auto& x : p) x /= s;
    const double y = u(rng), h = u(rng), draw = u(rng);
    for (bool det : {false, true}) {
      const bool to = decide(InferenceMode::kTriggerOnly, y, p, h, det, draw).fired;
      const bool ao = decide(InferenceMode::kActorOnly, y, p, h, det, draw).fired;
      const bool ta = decide(InferenceMode::kTriggerActor, y, p, h, det, draw).fired;
      EXPECT_EQ(ta, to && ao);
    }
  }
}

TEST(FilterTargets, Examples) {
  const std::vector<DetectedObject> tokens = {obj(ObjectClass::kPerson, 1, 0.2, 0.5),
                                              obj(ObjectClass::kPerson, 2, 0.6, 0.5),
                                              obj(ObjectClass::kSuitcase, 3, 0.4, 0.5), DetectedObject::padding()};
  const std::vector<double> scores = {0.9, 0.3, 0.99, 0.99};
  const auto t = filter_targets(tokens, scores, 0.5);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].track_id, 1u);
  EXPECT_TRUE(filter_targets(tokens, std::vector<double>{0.1, 0.2, 0.3, 0.4}, 0.5).empty());
  const auto all = filter_targets(tokens, scores, 0.0);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].track_id, 1u);
  EXPECT_EQ(all[1].track_id, 2u);
  EXPECT_THROW(filter_targets(tokens, std::vector<double>{0.1}, 0.5), DimensionError);
}

TEST(Centroid, Examples) {
  const std::vector<DetectedObject> two = {obj(ObjectClass::kPerson, 1, 0.2, 0.5), obj(ObjectClass::kPerson, 2, 0.6, 0.5)};
  const auto [x, y] = compute_centroid(two);
  EXPECT_DOUBLE_EQ(x, 0.4);
  EXPECT_DOUBLE_EQ(y, 0.5);
  const auto single = compute_centroid(std::span(two).first(1));
  EXPECT_DOUBLE_EQ(single.first, 0.2);
  EXPECT_THROW(compute_centroid(std::vector<DetectedObject>{}), InputError);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DetectedObject> five;
  long double sx = 0, sy = 0;
  for (std::uint32_t i = 0; i < 5; ++i) {
    five.push_back(obj(ObjectClass::kPerson, i, u(rng), u(rng)));
    sx += five.back().bbox.cx;
    sy += five.back().bbox.cy;
  }
  const auto c = compute_centroid(five);
  EXPECT_NEAR(c.first, static_cast<double>(sx / 5), 1e-15);
  EXPECT_NEAR(c.second, static_cast<double>(sy / 5), 1e-15);
}

// --- engine ----------------------------------------------------------------------

std::shared_ptr<const Policy> random_policy(Thresholds th, std::uint64_t seed = 3) {
  DecisionNetwork<float> net(tiny_model(8));
  net.init(seed);
  return std::make_shared<const Policy>(std::move(net), ActionCodebook::build(action_catalog()),
                                        std::make_shared<HashedBagEmbedder>(8), th);
}

std::vector<FramePacket> stream(std::size_t episodes, std::uint64_t seed) {
  std::vector<FramePacket> out;
  for (const auto& e : tiny_episodes(episodes, seed)) out.insert(out.end(), e.frames.begin(), e.frames.end());
  return out;
}

struct Run {
  std::vector<StepResult> steps;
  std::vector<InitiationCommand> commands;
};

Run run(const std::shared_ptr<const Policy>& policy, EngineConfig cfg, const std::vector<FramePacket>& frames) {
  InferenceEngine engine(policy, cfg);
  Run r;
  std::string episode;
  for (const auto& f : frames) {
    if (!episode.empty() && f.episode_id != episode) engine.reset();
    episode = f.episode_id;
    r.steps.push_back(engine.step(f));
    if (r.steps.back().command) r.commands.push_back(*r.steps.back().command);
  }
  return r;
}

TEST(Engine, UncalibratedPolicyIsRejected) {
  EXPECT_THROW(InferenceEngine(random_policy({}), {}), ConfigError);
  EXPECT_THROW(InferenceEngine(nullptr, {}), ConfigError);
}

TEST(Engine, RefractoryAndTargetInvariants) {
  const auto policy = random_policy({0.0, 0.0, true});
  EngineConfig cfg;
  cfg.mode = InferenceMode::kTriggerOnly;
  cfg.refractory_frames = 6;
  const auto frames = stream(3, 11);
  const auto r = run(policy, cfg, frames);
  ASSERT_FALSE(r.commands.empty());
  for (std::size_t i = 1; i < r.commands.size(); ++i)
    if (r.commands[i].episode_id == r.commands[i - 1].episode_id)
      EXPECT_GE(r.commands[i].frame_idx - r.commands[i - 1].frame_idx, 6);
  std::size_t refractory = 0;
  for (const auto& s : r.steps) refractory += s.event == StepEvent::kRefractory;
  EXPECT_GT(refractory, 0u);
  for (const auto& c : r.commands) {
    EXPECT_FALSE(c.target_track_ids.empty());
    EXPECT_NE(c.action_index, policy->codebook().null_index());
    EXPECT_GE(c.centroid_x, 0.0);
    EXPECT_LE(c.centroid_x, 1.0);
    EXPECT_GE(c.centroid_y, 0.0);
    EXPECT_LE(c.centroid_y, 1.0);
    const auto& frame = *std::find_if(frames.begin(), frames.end(), [&](const FramePacket& f) {
      return f.episode_id == c.episode_id && f.frame_idx == c.frame_idx;
    });
    for (auto id : c.target_track_ids) {
      const auto o = std::find_if(frame.objects.begin(), frame.objects.end(),
                                  [&](const DetectedObject& x) { return x.track_id == id; });
      ASSERT_NE(o, frame.objects.end());
      EXPECT_TRUE(o->is_person());
    }
  }
}

TEST(Engine, ModeConjunctionOnStream) {
  const auto policy = random_policy({0.5, 0.5, true}, 8);
  const auto frames = stream(4, 12);
  for (bool det : {false, true}) {
    EngineConfig cfg;
    cfg.refractory_frames = 0;
    cfg.deterministic = det;
    cfg.seed = 77;
    cfg.mode = InferenceMode::kTriggerOnly;
    const auto to = run(policy, cfg, frames);
    cfg.mode = InferenceMode::kActorOnly;
    const auto ao = run(policy, cfg, frames);
    cfg.mode = InferenceMode::kTriggerActor;
    const auto ta = run(policy, cfg, frames);
    std::size_t ta_fires = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      EXPECT_EQ(ta.steps[i].fired, to.steps[i].fired && ao.steps[i].fired) << "frame " << i;
      ta_fires += ta.steps[i].fired;
    }
    EXPECT_GT(ta_fires, 0u);
  }
}

TEST(Engine, WarmUpSuppression) {
  const auto policy = random_policy({0.0, 0.0, true});
  EngineConfig cfg;
  cfg.mode = InferenceMode::kTriggerOnly;
  cfg.suppress_warm_up = true;
  cfg.refractory_frames = 0;
  const auto frames = stream(1, 13);
  const auto r = run(policy, cfg, frames);
  const std::size_t n = policy->config().n;
  for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_EQ(r.steps[i].event, StepEvent::kWarmUp);
  EXPECT_NE(r.steps[n - 1].event, StepEvent::kWarmUp);
}

TEST(Engine, NoTargetIsSuppressed) {
  const auto policy = random_policy({0.0, 1.0, true});  // no score exceeds 1
  EngineConfig cfg;
  cfg.mode = InferenceMode::kTriggerOnly;
  const auto r = run(policy, cfg, stream(1, 14));
  EXPECT_TRUE(r.commands.empty());
  EXPECT_TRUE(std::any_of(r.steps.begin(), r.steps.end(),
                          [](const StepResult& s) { return s.event == StepEvent::kNoTarget; }));
}

TEST(Engine, SameSeedSameCommandsAndResetReplays) {
  const auto policy = random_policy({0.0, 0.0, true});
  EngineConfig cfg;
  cfg.mode = InferenceMode::kTriggerOnly;
  cfg.seed = 5;
  const auto frames = stream(2, 15);
  const auto a = run(policy, cfg, frames);
  const auto b = run(policy, cfg, frames);
  ASSERT_EQ(a.commands.size(), b.commands.size());
  for (std::size_t i = 0; i < a.commands.size(); ++i)
    EXPECT_EQ(command_to_json(a.commands[i]), command_to_json(b.commands[i]));
}

TEST(Engine, StreamOrderViolations) {
  const auto policy = random_policy({0.5, 0.5, true});
  InferenceEngine engine(policy, {});
  const auto frames = stream(2, 16);
  engine.step(frames[0]);
  engine.step(frames[1]);
  EXPECT_THROW(engine.step(frames[1]), StreamError);
  auto other = frames.back();
  EXPECT_THROW(engine.step(other), StreamError);
}

TEST(Engine, CommandJsonFields) {
  InitiationCommand c;
  c.episode_id = "ep";
  c.frame_idx = 7;
  c.action = {"Hello", 1, 3};
  c.target_track_ids = {4, 9};
  c.centroid_x = 0.25;
  c.centroid_y = 0.5;
  c.trigger_score = 0.75;
  c.action_probability = 0.5;
  const auto j = nlohmann::json::parse(command_to_json(c));
  EXPECT_EQ(j["frame_idx"], 7);
  EXPECT_EQ(j["action"]["utterance"], "Hello");
  EXPECT_EQ(j["target_track_ids"], nlohmann::json::array({4, 9}));
  EXPECT_EQ(j["centroid"][0], 0.25);
  EXPECT_EQ(j["trigger_score"], 0.75);
  EXPECT_EQ(inference_mode_from_string("actor-only"), InferenceMode::kActorOnly);
  EXPECT_THROW(inference_mode_from_string("both"), ConfigError);
}

}  // namespace
}  // namespace proact
