// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "proact/token_stream.hpp"

namespace proact {
namespace {

DetectedObject make(std::uint32_t id, ObjectClass cls, double w, double h, std::size_t f = 4) {
  DetectedObject o;
  o.track_id = id;
  o.cls = cls;
  o.bbox = {0.5, 0.5, w, h};
  o.feature.assign(f, static_cast<float>(id));
  return o;
}

FramePacket packet(std::int64_t idx, std::vector<DetectedObject> objs, std::string ep = "ep") {
  return {std::move(ep), idx, idx * 500, std::move(objs)};
}

TEST(SelectTopM, PersonsFirstByArea) {
  const std::vector<DetectedObject> objs = {
      make(1, ObjectClass::kPerson, 0.1, 1.0), make(2, ObjectClass::kPerson, 0.2, 1.0),
      make(3, ObjectClass::kPerson, 0.05, 1.0), make(4, ObjectClass::kCellPhone, 0.3, 1.0)};
  const auto top = select_top_m(objs, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].track_id, 2u);
  EXPECT_EQ(top[1].track_id, 1u);
  EXPECT_EQ(top[2].track_id, 3u);
}

TEST(SelectTopM, PadsShortfallAndEmptyFrames) {
  const std::vector<DetectedObject> objs = {make(1, ObjectClass::kPerson, 0.1, 0.1),
                                            make(2, ObjectClass::kSuitcase, 0.1, 0.1)};
  const auto top = select_top_m(objs, 5);
  ASSERT_EQ(top.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(top[i].is_padding(), i >= 2);
  const auto empty = select_top_m({}, 4);
  EXPECT_EQ(std::count_if(empty.begin(), empty.end(), [](const auto& o) { return o.is_padding(); }), 4);
}

TEST(SelectTopM, TieBreaksByTrackId) {
  const std::vector<DetectedObject> objs = {make(9, ObjectClass::kPerson, 0.2, 0.2),
                                            make(3, ObjectClass::kPerson, 0.2, 0.2)};
  EXPECT_EQ(select_top_m(objs, 2)[0].track_id, 3u);
}

TEST(SelectTopM, PermutationInvariantAndPersonsNeverDisplaced) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::uniform_int_distribution<int> cls(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DetectedObject> objs;
    const int count = trial % 12;
    for (int i = 0; i < count; ++i)
      objs.push_back(make(static_cast<std::uint32_t>(i), static_cast<ObjectClass>(cls(rng)), u(rng), u(rng)));
    const auto ref = select_top_m(objs, 6);
    std::shuffle(objs.begin(), objs.end(), rng);
    ASSERT_EQ(select_top_m(objs, 6), ref);
    const auto persons = std::count_if(objs.begin(), objs.end(), [](const auto& o) { return o.is_person(); });
    const auto kept = std::count_if(ref.begin(), ref.end(), [](const auto& o) { return o.is_person(); });
    ASSERT_EQ(kept, std::min<long>(persons, 6));
  }
}

TEST(QuantizePosition, Examples) {
  EXPECT_EQ(quantize_position({0.5, 0.5, 0.5, 0.5}), (std::array<int, 4>{8, 8, 8, 8}));
  EXPECT_EQ(quantize_position({0.99999, 1.0, 1.0, 1.0}), (std::array<int, 4>{15, 15, 15, 15}));
  EXPECT_EQ(quantize_position({0.2, 0.7, 0.1, 0.3}), (std::array<int, 4>{3, 11, 1, 4}));
  EXPECT_THROW(quantize_position({1.2, 0.5, 0.1, 0.1}), InputError);
  EXPECT_THROW(quantize_position({0.5, -0.1, 0.1, 0.1}), InputError);
}

class Embedding : public ::testing::Test {
 protected:
  void SetUp() override {
    layout.feature_dim = 4;
    layout.position_dim = 3;
    layout.class_dim = 2;
    embedder = TokenEmbedder<double>(layout, store);
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < store.size(); ++i) fill_normal(store.at(i).value, 1.0, rng);
  }
  TokenLayout layout;
  ParamStore<double> store;
  TokenEmbedder<double> embedder;
};

TEST_F(Embedding, PaddingTokenStructure) {
  const auto tok = embedder.assemble_token(DetectedObject::padding(), store);
  ASSERT_EQ(tok.e.size(), 9);
  EXPECT_TRUE(tok.e.head(4).isZero());
  const auto& pos = store.value(embedder.position_table());
  const RowVector<double> expected_pos = pos.row(0) + pos.row(16) + pos.row(32) + pos.row(48);
  EXPECT_EQ(tok.e.segment(4, 3), expected_pos);
  EXPECT_EQ(tok.e.tail(2), store.value(embedder.class_table()).row(6));
}

TEST_F(Embedding, ClassOnlyChangesClassSlice) {
  auto a = make(1, ObjectClass::kPerson, 0.2, 0.3);
  auto b = a;
  b.cls = ObjectClass::kHandbag;
  const auto ta = embedder.assemble_token(a, store), tb = embedder.assemble_token(b, store);
  EXPECT_EQ(ta.e.head(7), tb.e.head(7));
  EXPECT_NE(ta.e.tail(2), tb.e.tail(2));
}

TEST_F(Embedding, WrongFeatureLengthRejected) {
  EXPECT_THROW(embedder.assemble_token(make(1, ObjectClass::kPerson, 0.1, 0.1, 5), store), InputError);
}

TEST(RingBuffer, WarmUpWindow) {
  FrameRingBuffer buf(2, 3);
  const auto w = buf.push(packet(0, {make(1, ObjectClass::kPerson, 0.1, 0.1)}));
  ASSERT_EQ(w.objects.size(), 6u);
  EXPECT_TRUE(w.warm_up);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_TRUE(w.pad_mask[s]);
  EXPECT_FALSE(w.padded(2, 0));
  EXPECT_TRUE(w.padded(2, 1));
  EXPECT_EQ(w.frame_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(w.source_frames, (std::vector<std::int64_t>{-1, -1, 0}));
}

TEST(RingBuffer, KeepsLatestFrames) {
  FrameRingBuffer buf(2, 3);
  ClipWindow w;
  for (int i = 1; i <= 5; ++i) w = buf.push(packet(i, {make(static_cast<std::uint32_t>(i), ObjectClass::kPerson, 0.1, 0.1)}));
  EXPECT_FALSE(w.warm_up);
  EXPECT_EQ(w.source_frames, (std::vector<std::int64_t>{3, 4, 5}));
  EXPECT_EQ(w.at(0, 0).track_id, 3u);
  EXPECT_EQ(buf.frames_held(), 3u);
}

TEST(RingBuffer, RejectsOutOfOrderAndForeignEpisode) {
  FrameRingBuffer buf(2, 3);
  buf.push(packet(4, {}));
  EXPECT_THROW(buf.push(packet(4, {})), StreamError);
  EXPECT_THROW(buf.push(packet(2, {})), StreamError);
  EXPECT_THROW(buf.push(packet(5, {}, "other")), StreamError);
  buf.reset();
  EXPECT_NO_THROW(buf.push(packet(0, {}, "other")));
}

TEST(RingBuffer, ShapeIndependentOfDensity) {
  std::mt19937_64 rng(5);
  FrameRingBuffer buf(4, 5);
  for (int i = 0; i < 30; ++i) {
    std::vector<DetectedObject> objs;
    for (int j = 0; j < (i * 7) % 11; ++j) objs.push_back(make(static_cast<std::uint32_t>(j), ObjectClass::kPerson, 0.1, 0.1));
    const auto w = buf.push(packet(i, objs));
    ASSERT_EQ(w.objects.size(), 20u);
    for (std::size_t k = 0; k < 20; ++k) ASSERT_EQ(w.pad_mask[k], w.objects[k].is_padding());
  }
}

TEST(RingBuffer, WindowAtMatchesStreaming) {
  std::vector<FramePacket> frames;
  for (int i = 0; i < 8; ++i)
    frames.push_back(packet(i, {make(static_cast<std::uint32_t>(i % 3), ObjectClass::kPerson, 0.1 + 0.01 * i, 0.1)}));
  FrameRingBuffer buf(3, 4);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto streamed = buf.push(frames[i]);
    const auto direct = window_at(frames, i, 3, 4);
    ASSERT_EQ(streamed.objects, direct.objects);
    ASSERT_EQ(streamed.source_frames, direct.source_frames);
    ASSERT_EQ(streamed.warm_up, direct.warm_up);
  }
}

}  // namespace
}  // namespace proact
