// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "proact/ops.hpp"
#include "proact/tensor.hpp"

namespace proact {

/// (utterance, emoji expression, body motion).
struct MultiModalAction {
  std::string utterance;
  int expression_id = 0;
  int motion_id = 0;

  auto operator<=>(const MultiModalAction&) const = default;
  bool operator==(const MultiModalAction&) const = default;
};

/// Text -> fixed-length vector. Implementations must be deterministic.
class UtteranceEmbedder {
 public:
  virtual ~UtteranceEmbedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
  /// Stable identifier written into checkpoints.
  virtual std::string id() const = 0;
};

/// 64-bit FNV-1a over the bytes of a token.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercases ASCII and splits on whitespace.
std::vector<std::string> tokenize_utterance(std::string_view text);

/// Hashed bag of tokens: each token adds 1 to bucket fnv1a64(token) % dim,
/// and the count vector is L2-normalized (zero vector for empty text).
std::vector<double> stub_embed(std::string_view text, std::size_t dim = 64);

class HashedBagEmbedder final : public UtteranceEmbedder {
 public:
  explicit HashedBagEmbedder(std::size_t dim = 64) : dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override { return stub_embed(text, dim_); }
  std::string id() const override { return "hashed-bag-fnv1a64"; }

 private:
  std::size_t dim_;
};

/// Builds an embedder from its checkpoint identifier.
std::unique_ptr<UtteranceEmbedder> make_embedder(std::string_view id, std::size_t dim);

/// K unique actions in first-occurrence order, with NULL at index K.
class ActionCodebook {
 public:
  ActionCodebook() = default;

  static ActionCodebook build(std::span<const MultiModalAction> annotated);
  static ActionCodebook from_actions(std::vector<MultiModalAction> actions);

  std::size_t size() const { return actions_.size(); }  // K
  std::size_t rows() const { return actions_.size() + 1; }  // K + 1
  std::size_t null_index() const { return actions_.size(); }
  const std::vector<MultiModalAction>& actions() const { return actions_; }
  const MultiModalAction& at(std::size_t k) const { return actions_.at(k); }

  std::optional<std::size_t> find(const MultiModalAction& a) const;
  std::size_t index_of(const MultiModalAction& a) const;

  bool operator==(const ActionCodebook& o) const { return actions_ == o.actions_; }

 private:
  std::vector<MultiModalAction> actions_;
  std::map<MultiModalAction, std::size_t> index_;
};

struct ActionEncoderConfig {
  std::size_t utterance_dim = 64;  // E
  int expression_vocab = 32;
  int motion_vocab = 32;
  std::size_t expression_dim = 16;
  std::size_t motion_dim = 16;
  std::size_t hidden_dim = 256;  // 2D
  std::size_t output_dim = 128;  // D

  std::size_t input_dim() const { return utterance_dim + expression_dim + motion_dim; }
};

template <class T>
struct ActionEncodingCache {
  Tensor<T> input;   // K x in
  Tensor<T> hidden;  // K x hidden, pre-activation
  Tensor<T> act;     // K x hidden, post-activation
  std::vector<MultiModalAction> actions;
};

/// phi(a) = FFN(embed(u) ⊕ EMB(f) ⊕ EMB(m)); NULL uses a learned row.
template <class T>
class ActionEncoder {
 public:
  ActionEncoder() = default;
  ActionEncoder(const ActionEncoderConfig& cfg, ParamStore<T>& store);

  const ActionEncoderConfig& config() const { return cfg_; }

  RowVector<T> encode_action(const MultiModalAction& a, const UtteranceEmbedder& embedder,
                             const ParamStore<T>& store) const;
  /// (K+1) x D matrix, NULL last.
  Tensor<T> encode_all(const ActionCodebook& codebook, const UtteranceEmbedder& embedder,
                       const ParamStore<T>& store, ActionEncodingCache<T>* cache = nullptr) const;
  void backward(const ActionEncodingCache<T>& cache, const Tensor<T>& d_phi,
                const ParamStore<T>& store, GradientSet<T>& grads) const;

  /// Input row for the FFN; exposed for structural tests.
  RowVector<T> ffn_input(const MultiModalAction& a, const UtteranceEmbedder& embedder,
                         const ParamStore<T>& store) const;

 private:
  void check_vocab(const MultiModalAction& a) const;

  ActionEncoderConfig cfg_;
  std::size_t expr_ = 0, motion_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, null_ = 0;
};

}  // namespace proact
