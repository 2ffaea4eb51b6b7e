// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "proact/action_codebook.hpp"
#include "proact/gradcheck.hpp"

namespace proact {
namespace {

TEST(StubEmbed, EmptyAndRepeatedTokens) {
  const auto zero = stub_embed("");
  ASSERT_EQ(zero.size(), 64u);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(stub_embed("hello hello"), stub_embed("hello"));
  EXPECT_EQ(stub_embed("Hello  WORLD"), stub_embed("hello world"));
}

TEST(StubEmbed, MatchesIndependentHash) {
  // FNV-1a 64 buckets computed outside this code base: good -> 24, morning -> 15, miss -> 57.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("good"), 11305396749966545176ULL);
  const auto v = stub_embed("good morning miss");
  const double third = 1.0 / std::sqrt(3.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool hot = i == 24 || i == 15 || i == 57;
    EXPECT_NEAR(v[i], hot ? third : 0.0, 1e-15) << i;
  }
}

std::vector<MultiModalAction> sample_actions() {
  return {{"hi", 1, 2}, {"bye", 3, 4}, {"hi", 1, 2}, {"hi", 1, 3}, {"bye", 3, 4}};
}

TEST(Codebook, DedupInFirstOccurrenceOrder) {
  const auto acts = sample_actions();
  const auto cb = ActionCodebook::build(acts);
  EXPECT_EQ(cb.size(), 3u);
  EXPECT_EQ(cb.rows(), 4u);
  EXPECT_EQ(cb.null_index(), 3u);
  EXPECT_EQ(cb.index_of({"bye", 3, 4}), 1u);
  EXPECT_EQ(cb.index_of({"hi", 1, 3}), 2u);
  for (const auto& a : acts) EXPECT_NO_THROW(cb.index_of(a));
  EXPECT_EQ(ActionCodebook::build(acts), cb);
  EXPECT_THROW(cb.index_of({"unknown", 0, 0}), LabelError);
}

TEST(Codebook, RejectsEmptyInputs) {
  EXPECT_THROW(ActionCodebook::build({}), ConfigError);
  const std::vector<MultiModalAction> blank = {{"", 0, 0}};
  EXPECT_THROW(ActionCodebook::build(blank), InputError);
  EXPECT_THROW(ActionCodebook::from_actions({{"a", 0, 0}, {"a", 0, 0}}), ConfigError);
}

class Encoder : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg.utterance_dim = 8;
    cfg.expression_vocab = 6;
    cfg.motion_vocab = 6;
    cfg.expression_dim = 3;
    cfg.motion_dim = 2;
    cfg.hidden_dim = 10;
    cfg.output_dim = 5;
    encoder = ActionEncoder<double>(cfg, store);
    std::mt19937_64 rng(17);
    for (std::size_t i = 0; i < store.size(); ++i) fill_normal(store.at(i).value, 0.5, rng);
  }
  ActionEncoderConfig cfg;
  ParamStore<double> store;
  ActionEncoder<double> encoder;
  HashedBagEmbedder embedder{8};
};

TEST_F(Encoder, MotionChangesOnlyMotionSlice) {
  const auto a = encoder.ffn_input({"hello there", 2, 1}, embedder, store);
  const auto b = encoder.ffn_input({"hello there", 2, 4}, embedder, store);
  EXPECT_EQ(a.head(11), b.head(11));
  EXPECT_NE(a.tail(2), b.tail(2));
}

TEST_F(Encoder, DeterministicAndShaped) {
  const MultiModalAction a{"how is my pose?", 5, 5};
  const auto x = encoder.encode_action(a, embedder, store);
  EXPECT_EQ(x.size(), 5);
  EXPECT_EQ(x, encoder.encode_action(a, embedder, store));
}

TEST_F(Encoder, OutOfVocabularyRejected) {
  EXPECT_THROW(encoder.encode_action({"x", 6, 0}, embedder, store), InputError);
  EXPECT_THROW(encoder.encode_action({"x", 0, -1}, embedder, store), InputError);
  HashedBagEmbedder wide(16);
  EXPECT_THROW(encoder.encode_action({"x", 0, 0}, wide, store), DimensionError);
}

TEST_F(Encoder, EncodeAllShapeAndPermutation) {
  const auto cb = ActionCodebook::from_actions({{"a b", 0, 1}, {"c", 2, 3}, {"d e f", 4, 5}});
  const auto phi = encoder.encode_all(cb, embedder, store);
  ASSERT_EQ(phi.rows(), 4);
  EXPECT_EQ(phi.row(3), store.value(store.index_of("action.null.vector")).row(0));
  const auto perm = ActionCodebook::from_actions({{"d e f", 4, 5}, {"a b", 0, 1}, {"c", 2, 3}});
  const auto phi2 = encoder.encode_all(perm, embedder, store);
  EXPECT_EQ(phi2.row(0), phi.row(2));
  EXPECT_EQ(phi2.row(1), phi.row(0));
  EXPECT_EQ(phi2.row(2), phi.row(1));
  EXPECT_EQ(phi2.row(3), phi.row(3));
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(phi.row(k), encoder.encode_action(cb.at(k), embedder, store));
}

TEST_F(Encoder, SharedWeightsMoveEveryRow) {
  const auto cb = ActionCodebook::from_actions({{"a b", 0, 1}, {"c", 2, 3}, {"d e f", 4, 5}});
  const auto before = encoder.encode_all(cb, embedder, store);
  store.value(store.index_of("action.ffn2.weight")).array() += 0.01;
  const auto after = encoder.encode_all(cb, embedder, store);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NE(before.row(k), after.row(k));
}

TEST_F(Encoder, GradientMatchesFiniteDifferences) {
  const auto cb = ActionCodebook::from_actions({{"a b", 0, 1}, {"c", 2, 3}, {"a", 0, 3}});
  std::mt19937_64 rng(29);
  Tensor<double> probe(4, 5);
  fill_normal(probe, 1.0, rng);
  DifferentiableLoss loss{
      [&](ParamStore<double>& s) {
        const auto phi = encoder.encode_all(cb, embedder, s);
        return (phi.array() * probe.array()).sum() + 0.5 * phi.squaredNorm();
      },
      [&](ParamStore<double>& s) {
        ActionEncodingCache<double> cache;
        const auto phi = encoder.encode_all(cb, embedder, s, &cache);
        auto grads = s.make_gradient_set();
        encoder.backward(cache, probe + phi, s, grads);
        s.accumulate(grads);
      }};
  const auto report = finite_diff_check(store, loss);
  EXPECT_TRUE(report.passed()) << report.summary();
}

TEST(Embedder, FactoryRoundTrip) {
  const auto e = make_embedder("hashed-bag-fnv1a64", 32);
  EXPECT_EQ(e->dimension(), 32u);
  EXPECT_EQ(e->id(), "hashed-bag-fnv1a64");
  EXPECT_THROW(make_embedder("transformer-xl", 32), ConfigError);
}

}  // namespace
}  // namespace proact
