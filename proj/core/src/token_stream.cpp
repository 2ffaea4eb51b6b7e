// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/token_stream.hpp"

#include <algorithm>
#include <cmath>

#include "proact/errors.hpp"

namespace proact {

namespace {

constexpr std::array<std::string_view, kNumObjectClasses> kClassNames = {
    "person", "backpack", "handbag", "suitcase", "tie", "cell_phone", "padding"};

bool outranks(const DetectedObject& a, const DetectedObject& b) {
  if (a.is_person() != b.is_person()) return a.is_person();
  const double aa = a.bbox.area();
  const double ba = b.bbox.area();
  if (aa != ba) return aa > ba;
  return a.track_id < b.track_id;
}

}  // namespace

std::string_view to_string(ObjectClass cls) {
  return kClassNames.at(static_cast<std::size_t>(cls));
}

ObjectClass object_class_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == name) return static_cast<ObjectClass>(i);
  throw InputError("unknown object class '" + std::string(name) + "'");
}

ObjectClass object_class_from_id(int id) {
  if (id < 0 || id >= kNumObjectClasses)
    throw InputError("unknown object class id " + std::to_string(id));
  return static_cast<ObjectClass>(id);
}

std::size_t ClipWindow::real_count() const {
  return static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), false));
}

std::vector<DetectedObject> select_top_m(std::span<const DetectedObject> objects, std::size_t m) {
  std::vector<const DetectedObject*> order;
  order.reserve(objects.size());
  for (const auto& o : objects)
    if (!o.is_padding()) order.push_back(&o);
  std::sort(order.begin(), order.end(),
            [](const DetectedObject* a, const DetectedObject* b) { return outranks(*a, *b); });
  std::vector<DetectedObject> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    out.push_back(i < order.size() ? *order[i] : DetectedObject::padding());
  return out;
}

std::array<int, 4> quantize_position(const BoundingBox& bbox, int bins) {
  const std::array<double, 4> v = {bbox.cx, bbox.cy, bbox.w, bbox.h};
  std::array<int, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0))
      throw InputError("bbox component " + std::to_string(v[i]) + " outside [0,1]");
    out[i] = std::clamp(static_cast<int>(std::floor(v[i] * bins)), 0, bins - 1);
  }
  return out;
}

// --- TokenEmbedder -----------------------------------------------------------

template <class T>
TokenEmbedder<T>::TokenEmbedder(const TokenLayout& layout, ParamStore<T>& store)
    : layout_(layout) {
  pos_ = store.add("token.position.table", 4 * layout.position_bins,
                   static_cast<Eigen::Index>(layout.position_dim));
  cls_ = store.add("token.class.table", kNumObjectClasses, static_cast<Eigen::Index>(layout.class_dim));
}

template <class T>
void TokenEmbedder<T>::assemble(const DetectedObject& obj, const ParamStore<T>& store,
                                Eigen::Ref<RowVector<T>> out) const {
  const auto f = static_cast<Eigen::Index>(layout_.feature_dim);
  const auto p = static_cast<Eigen::Index>(layout_.position_dim);
  const auto c = static_cast<Eigen::Index>(layout_.class_dim);
  if (out.size() != f + p + c) throw DimensionError("token buffer has wrong length");
  if (obj.is_padding()) {
    out.head(f).setZero();
  } else {
    if (obj.feature.size() != layout_.feature_dim)
      throw InputError("object feature length " + std::to_string(obj.feature.size()) +
                       " != " + std::to_string(layout_.feature_dim));
    for (Eigen::Index i = 0; i < f; ++i) out[i] = static_cast<T>(obj.feature[i]);
  }
  const auto bins = quantize_position(obj.bbox, layout_.position_bins);
  const auto& pos = store.value(pos_);
  auto pos_out = out.segment(f, p);
  pos_out.setZero();
  for (int k = 0; k < 4; ++k) pos_out += pos.row(k * layout_.position_bins + bins[k]);
  const int cls = static_cast<int>(obj.cls);
  if (cls < 0 || cls >= kNumObjectClasses) throw InputError("unknown object class id");
  out.segment(f + p, c) = store.value(cls_).row(cls);
}

template <class T>
VisualToken<T> TokenEmbedder<T>::assemble_token(const DetectedObject& obj,
                                                const ParamStore<T>& store,
                                                int frame_offset) const {
  VisualToken<T> token;
  token.e.resize(static_cast<Eigen::Index>(layout_.token_dim()));
  assemble(obj, store, token.e);
  token.source = &obj;
  token.frame_offset = frame_offset;
  return token;
}

template <class T>
void TokenEmbedder<T>::backward(const DetectedObject& obj,
                                const Eigen::Ref<const RowVector<T>>& d_token,
                                GradientSet<T>& grads) const {
  const auto f = static_cast<Eigen::Index>(layout_.feature_dim);
  const auto p = static_cast<Eigen::Index>(layout_.position_dim);
  const auto c = static_cast<Eigen::Index>(layout_.class_dim);
  const auto bins = quantize_position(obj.bbox, layout_.position_bins);
  auto& gpos = grads[pos_];
  for (int k = 0; k < 4; ++k) gpos.row(k * layout_.position_bins + bins[k]) += d_token.segment(f, p);
  grads[cls_].row(static_cast<int>(obj.cls)) += d_token.segment(f + p, c);
}

template class TokenEmbedder<float>;
template class TokenEmbedder<double>;

// --- ring buffer ---------------------------------------------------------------

FrameRingBuffer::FrameRingBuffer(std::size_t m, std::size_t n) : m_(m), n_(n) {
  if (m == 0 || n == 0) throw ConfigError("ring buffer needs m >= 1 and n >= 1");
}

void FrameRingBuffer::reset() {
  frames_.clear();
  last_idx_.reset();
  episode_.clear();
}

ClipWindow FrameRingBuffer::push(const FramePacket& packet) {
  if (last_idx_) {
    if (packet.episode_id != episode_)
      throw StreamError("packet from episode '" + packet.episode_id + "' pushed into buffer of '" +
                        episode_ + "'");
    if (packet.frame_idx <= *last_idx_)
      throw StreamError("out-of-order frame " + std::to_string(packet.frame_idx) + " after " +
                        std::to_string(*last_idx_) + " in episode '" + episode_ + "'");
  }
  episode_ = packet.episode_id;
  last_idx_ = packet.frame_idx;
  frames_.push_back({packet.frame_idx, select_top_m(packet.objects, m_)});
  while (frames_.size() > n_) frames_.pop_front();
  return window();
}

ClipWindow FrameRingBuffer::window() const {
  ClipWindow w;
  w.m = m_;
  w.n = n_;
  w.objects.reserve(m_ * n_);
  w.pad_mask.reserve(m_ * n_);
  w.frame_ids.resize(n_);
  w.source_frames.assign(n_, -1);
  const std::size_t missing = n_ - frames_.size();
  w.warm_up = missing > 0;
  for (std::size_t f = 0; f < n_; ++f) {
    w.frame_ids[f] = static_cast<int>(f) + 1;
    if (f < missing) {
      for (std::size_t s = 0; s < m_; ++s) {
        w.objects.push_back(DetectedObject::padding());
        w.pad_mask.push_back(true);
      }
      continue;
    }
    const auto& entry = frames_[f - missing];
    w.source_frames[f] = entry.frame_idx;
    for (const auto& o : entry.selected) {
      w.objects.push_back(o);
      w.pad_mask.push_back(o.is_padding());
    }
  }
  return w;
}

ClipWindow push_and_window(FrameRingBuffer& buffer, const FramePacket& packet) {
  return buffer.push(packet);
}

ClipWindow window_at(std::span<const FramePacket> frames, std::size_t end, std::size_t m,
                     std::size_t n) {
  if (end >= frames.size()) throw InputError("window end beyond episode length");
  FrameRingBuffer buffer(m, n);
  const std::size_t first = end + 1 >= n ? end + 1 - n : 0;
  ClipWindow w;
  for (std::size_t i = first; i <= end; ++i) w = buffer.push(frames[i]);
  return w;
}

}  // namespace proact
