// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Detected objects -> fixed M x N token grid over the latest N frames.

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proact/tensor.hpp"

namespace proact {

/// The six detector categories of interest plus the reserved padding class.
enum class ObjectClass : std::uint8_t {
  kPerson = 0,
  kBackpack,
  kHandbag,
  kSuitcase,
  kTie,
  kCellPhone,
  kPadding,
};

inline constexpr int kNumObjectClasses = 7;

std::string_view to_string(ObjectClass cls);
/// Accepts the snake-case names used in the episode files ("cell_phone").
ObjectClass object_class_from_string(std::string_view name);
ObjectClass object_class_from_id(int id);

/// Normalized center-size box.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool operator==(const BoundingBox&) const = default;
};

struct DetectedObject {
  std::uint32_t track_id = 0;
  ObjectClass cls = ObjectClass::kPadding;
  BoundingBox bbox;
  std::vector<float> feature;  // empty for padding; zeros implied

  bool is_padding() const { return cls == ObjectClass::kPadding; }
  bool is_person() const { return cls == ObjectClass::kPerson; }
  bool operator==(const DetectedObject&) const = default;

  static DetectedObject padding() { return {}; }
};

struct FramePacket {
  std::string episode_id;
  std::int64_t frame_idx = 0;
  std::int64_t timestamp_ms = 0;
  std::vector<DetectedObject> objects;
};

/// M x N grid of objects, frame-major with the oldest frame first.
struct ClipWindow {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<DetectedObject> objects;        // n * m
  std::vector<bool> pad_mask;                 // n * m, true where padding
  std::vector<int> frame_ids;                 // relative ids 1..n
  std::vector<std::int64_t> source_frames;    // frame_idx per slot, -1 for warm-up frames
  bool warm_up = false;                       // fewer than n real frames available

  const DetectedObject& at(std::size_t frame, std::size_t slot) const {
    return objects[frame * m + slot];
  }
  bool padded(std::size_t frame, std::size_t slot) const { return pad_mask[frame * m + slot]; }
  std::size_t real_count() const;
};

/// Persons first, then larger boxes, then lower track ids; shortfall is
/// filled with padding, overflow truncated. Input order never matters.
std::vector<DetectedObject> select_top_m(std::span<const DetectedObject> objects, std::size_t m);

inline constexpr int kDefaultPositionBins = 16;

/// floor(v * bins) clamped to [0, bins-1] for cx, cy, w, h.
std::array<int, 4> quantize_position(const BoundingBox& bbox, int bins = kDefaultPositionBins);

struct TokenLayout {
  std::size_t feature_dim = 64;  // F
  std::size_t position_dim = 16; // P
  std::size_t class_dim = 16;    // C
  int position_bins = kDefaultPositionBins;

  std::size_t token_dim() const { return feature_dim + position_dim + class_dim; }
};

/// A visual token: feature ⊕ summed position-bin embeddings ⊕ class embedding.
template <class T>
struct VisualToken {
  RowVector<T> e;
  const DetectedObject* source = nullptr;
  int frame_offset = 0;  // 1..n
};

/// Learned position/class embedding tables (part of the model parameters).
template <class T>
class TokenEmbedder {
 public:
  TokenEmbedder() = default;
  TokenEmbedder(const TokenLayout& layout, ParamStore<T>& store);

  const TokenLayout& layout() const { return layout_; }
  std::size_t position_table() const { return pos_; }
  std::size_t class_table() const { return cls_; }

  /// Writes the token vector into `out` (length F + P + C).
  void assemble(const DetectedObject& obj, const ParamStore<T>& store,
                Eigen::Ref<RowVector<T>> out) const;
  VisualToken<T> assemble_token(const DetectedObject& obj, const ParamStore<T>& store,
                                int frame_offset = 0) const;
  /// Accumulates d(token) into the position/class table gradients.
  void backward(const DetectedObject& obj, const Eigen::Ref<const RowVector<T>>& d_token,
                GradientSet<T>& grads) const;

 private:
  TokenLayout layout_;
  std::size_t pos_ = 0;  // (4 * bins) x P
  std::size_t cls_ = 0;  // kNumObjectClasses x C
};

/// Per-stream buffer of the latest n selected frames.
class FrameRingBuffer {
 public:
  FrameRingBuffer(std::size_t m, std::size_t n);

  /// Pushes a frame and returns the window ending at it.
  ClipWindow push(const FramePacket& packet);
  void reset();

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t frames_held() const { return frames_.size(); }
  const std::optional<std::int64_t>& last_frame_idx() const { return last_idx_; }
  const std::string& episode_id() const { return episode_; }

 private:
  struct Entry {
    std::int64_t frame_idx;
    std::vector<DetectedObject> selected;
  };
  ClipWindow window() const;

  std::size_t m_;
  std::size_t n_;
  std::deque<Entry> frames_;
  std::optional<std::int64_t> last_idx_;
  std::string episode_;
};

ClipWindow push_and_window(FrameRingBuffer& buffer, const FramePacket& packet);

/// Window ending at frames[end] built without a ring buffer; identical to
/// what streaming push() returns at that point.
ClipWindow window_at(std::span<const FramePacket> frames, std::size_t end, std::size_t m,
                     std::size_t n);

}  // namespace proact
