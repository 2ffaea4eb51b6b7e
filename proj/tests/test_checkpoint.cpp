// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "proact/checkpoint.hpp"
#include "proact/errors.hpp"
#include "proact/evaluation.hpp"
#include "support.hpp"

namespace proact {
namespace {

using testing::tiny_episodes;
using testing::tiny_model;
using testing::tiny_sim;

Checkpoint sample_checkpoint() {
  DecisionNetwork<float> net(tiny_model(8));
  net.init(17);
  net.params().set_step(42);
  HashedBagEmbedder emb(8);
  return make_checkpoint(net, ActionCodebook::build(action_catalog()), emb, {0.625, 0.375, true},
                         {{"train.seed", "17"}, {"note", "unit"}});
}

// Independent parameter count from the architecture's shape arithmetic.
std::size_t expected_parameters(const ModelConfig& c) {
  const std::size_t d = c.d_model, f = c.ffn_mult * d, tok = c.feature_dim + c.position_dim + c.class_dim;
  std::size_t n = 4 * static_cast<std::size_t>(c.position_bins) * c.position_dim + 7 * c.class_dim;  // token tables
  n += tok * d + d + c.n * d;                                                                        // input, frames
  n += c.blocks * (2 * d + d * 3 * d + 2 * d + d * d + d + 2 * d + d * f + f + f * d + d);
  n += 2 * d + d + (d + 1) + (d + 1);  // final norm, fallback, trigger, target
  const std::size_t in = c.utterance_dim + c.expression_dim + c.motion_dim;
  n += static_cast<std::size_t>(c.expression_vocab) * c.expression_dim +
       static_cast<std::size_t>(c.motion_vocab) * c.motion_dim;
  n += in * 2 * d + 2 * d + 2 * d * d + d + d;  // action FFN and NULL row
  return n;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto a = sample_checkpoint();
  const auto b = deserialize_checkpoint(serialize_checkpoint(a));
  EXPECT_EQ(b.version, kCheckpointVersion);
  EXPECT_EQ(b.config, a.config);
  EXPECT_EQ(b.codebook, a.codebook);
  EXPECT_EQ(b.embedder_id, a.embedder_id);
  EXPECT_EQ(b.embedder_dim, a.embedder_dim);
  EXPECT_EQ(b.thresholds, a.thresholds);
  EXPECT_EQ(b.training, a.training);
  EXPECT_EQ(b.params.step(), 42);
  ASSERT_EQ(b.params.size(), a.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(b.params.at(i).name, a.params.at(i).name);
    const auto& x = a.params.value(i);
    const auto& y = b.params.value(i);
    ASSERT_EQ(x.size(), y.size());
    EXPECT_EQ(std::memcmp(x.data(), y.data(), sizeof(float) * static_cast<std::size_t>(x.size())), 0);
  }
  EXPECT_EQ(serialize_checkpoint(b), serialize_checkpoint(a));
}

TEST(Checkpoint, ParameterCountMatchesShapeArithmetic) {
  const auto c = sample_checkpoint();
  EXPECT_EQ(c.params.total_count(), expected_parameters(c.config));
  ModelConfig desk;
  desk.num_actions = 8;
  EXPECT_EQ(DecisionNetwork<float>(desk).params().total_count(), expected_parameters(desk));
}

TEST(Checkpoint, FileRoundTripIsAtomic) {
  const auto dir = std::filesystem::temp_directory_path() / "proact-ckpt-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  save_checkpoint(sample_checkpoint(), path);
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(path)), serialize_checkpoint(sample_checkpoint()));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string good = serialize_checkpoint(sample_checkpoint());
  for (std::size_t pos : {std::size_t{9}, good.size() / 2, good.size() - 10, good.size() - 1}) {
    std::string bad = good;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x20);
    EXPECT_THROW(deserialize_checkpoint(bad), CheckpointError) << "byte " << pos;
  }
  try {
    std::string bad = good;
    bad[good.size() / 2] ^= 1;
    deserialize_checkpoint(bad);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
  EXPECT_THROW(deserialize_checkpoint(good.substr(0, good.size() - 100)), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint(good.substr(0, 10)), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint("NOTACKPT" + good.substr(8)), CheckpointError);
}

TEST(Checkpoint, UnknownVersionIsRejected) {
  Checkpoint c = sample_checkpoint();
  c.version = kCheckpointVersion + 1;
  try {
    deserialize_checkpoint(serialize_checkpoint(c));
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, InconsistentContentsAreRejected) {
  Checkpoint c = sample_checkpoint();
  c.config.num_actions = 5;
  EXPECT_THROW(deserialize_checkpoint(serialize_checkpoint(c)), CheckpointError);
  Checkpoint d = sample_checkpoint();
  d.config.d_model = 32;  // tensors no longer fit the config
  d.config.num_actions = 8;
  const auto loaded = deserialize_checkpoint(serialize_checkpoint(d));
  EXPECT_THROW(Policy{loaded}, CheckpointError);
  Checkpoint e = sample_checkpoint();
  e.embedder_id = "word2vec";
  EXPECT_THROW(Policy{deserialize_checkpoint(serialize_checkpoint(e))}, ConfigError);
}

TEST(Checkpoint, EvaluationIdenticalAfterRoundTrip) {
  const auto ckpt = sample_checkpoint();
  const Policy before(ckpt);
  const Policy after(deserialize_checkpoint(serialize_checkpoint(before.to_checkpoint(ckpt.training))));
  const auto eps = tiny_episodes(12, 8);
  const auto span = static_cast<std::size_t>(tiny_sim().span_frames());
  for (auto mode : {InferenceMode::kTriggerOnly, InferenceMode::kActorOnly, InferenceMode::kTriggerActor}) {
    const auto a = evaluate_checkpoint(before, eps, mode, span);
    const auto b = evaluate_checkpoint(after, eps, mode, span);
    EXPECT_EQ(report_to_json(a), report_to_json(b));
    EXPECT_EQ(pr_curve_to_csv(a.curve), pr_curve_to_csv(b.curve));
  }
}

TEST(Checkpoint, ModelConfigJsonRoundTrip) {
  ModelConfig c = tiny_model(3);
  c.init_std = 0.123;
  EXPECT_EQ(model_config_from_json(model_config_to_json(c)), c);
  EXPECT_THROW(model_config_from_json("{"), ConfigError);
}

}  // namespace
}  // namespace proact
