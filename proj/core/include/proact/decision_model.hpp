// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Frame-causal masked transformer over M x N visual tokens with trigger,
// target and action heads, plus the gated multi-task loss.
//
// Only non-padding tokens enter the transformer. Padding is masked as keys
// and excluded from pooling, so dropping those rows leaves every real-token
// output unchanged; padding slots report target logit = target bias.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "proact/action_codebook.hpp"
#include "proact/ops.hpp"
#include "proact/tensor.hpp"
#include "proact/token_stream.hpp"

namespace proact {

struct ModelConfig {
  std::size_t m = 20;  // tokens per frame
  std::size_t n = 10;  // frames per window
  std::size_t feature_dim = 64;
  std::size_t position_dim = 16;
  std::size_t class_dim = 16;
  int position_bins = kDefaultPositionBins;
  std::size_t d_model = 128;
  std::size_t blocks = 6;
  std::size_t heads = 4;
  std::size_t ffn_mult = 4;
  std::size_t num_actions = 0;  // K, NULL excluded
  std::size_t utterance_dim = 64;
  int expression_vocab = 32;
  int motion_vocab = 32;
  std::size_t expression_dim = 16;
  std::size_t motion_dim = 16;
  double ln_eps = 1e-5;
  double init_std = 0.02;

  void validate() const;
  TokenLayout token_layout() const;
  ActionEncoderConfig action_config() const;
  bool operator==(const ModelConfig&) const = default;
};

template <class T>
struct DecisionOutput {
  std::size_t m = 0, n = 0;
  RowVector<T> trigger;        // n, in (0,1)
  RowVector<T> trigger_logit;  // n
  Tensor<T> target;            // n x m
  Tensor<T> target_logit;      // n x m
  Tensor<T> action_dist;       // n x (K+1), rows sum to 1
  Tensor<T> action_logit;      // n x (K+1)
  std::vector<bool> fallback_frames;  // pooled from the learned fallback vector
  bool warm_up = false;
};

/// Outputs at the newest frame of a window.
template <class T>
struct FramePrediction {
  T trigger{};
  RowVector<T> target;       // m
  RowVector<T> action_dist;  // K+1
  bool fallback = false;
  bool warm_up = false;
};

/// Per-frame labels for one clip. target/target_eligible are n*m, frame-major.
struct ClipLabels {
  std::vector<int> trigger;               // y per frame
  std::vector<int> target;                // h per token
  std::vector<bool> target_eligible;      // non-padding person tokens
  std::vector<std::size_t> action;        // class index in [0, K] per frame
};

struct LossOptions {
  bool final_frame_only = false;
  /// Weight of an extra (1 - y) * CE(NULL, p) term. Zero gives the pure
  /// gated loss.
  double null_action_weight = 0.0;
};

template <class T>
struct OutputGradient {
  RowVector<T> trigger_logit;
  Tensor<T> target_logit;
  Tensor<T> action_logit;
};

template <class T>
struct LossResult {
  T total{}, trigger{}, action{}, target{};
  OutputGradient<T> grad;
};

/// Additive mn x mn mask: query token in frame a may see key tokens of frames
/// <= a; padding keys (when a mask is given) are hidden as well.
Tensor<double> build_causal_mask(std::size_t m, std::size_t n,
                                 const std::vector<bool>* pad_mask = nullptr);

template <class T>
struct BlockCache {
  Tensor<T> input;
  LayerNormCache<T> ln1;
  Tensor<T> normed1;
  Tensor<T> qkv;
  std::vector<AttentionCache<T>> heads;
  Tensor<T> ctx;
  Tensor<T> mid;
  LayerNormCache<T> ln2;
  Tensor<T> normed2;
  Tensor<T> hidden;
  Tensor<T> act;
};

template <class T>
struct ForwardCache {
  const ClipWindow* window = nullptr;
  std::vector<std::size_t> slots;  // window slot of each real token
  std::vector<int> frames;         // 0-based frame of each real token
  std::vector<std::size_t> frame_begin;  // n + 1 offsets into the token rows
  Tensor<T> tokens;                // S x (F+P+C)
  Tensor<T> mask;                  // S x S
  std::vector<BlockCache<T>> blocks;
  Tensor<T> final_input;
  LayerNormCache<T> final_ln;
  Tensor<T> encoded;               // S x D
  Tensor<T> pooled;                // n x D
  std::vector<std::vector<int>> argmax;  // n x D token rows, -1 for fallback
};

template <class T>
class DecisionModel {
 public:
  DecisionModel() = default;
  DecisionModel(const ModelConfig& cfg, ParamStore<T>& store);

  const ModelConfig& config() const { return cfg_; }
  const TokenEmbedder<T>& token_embedder() const { return embedder_; }

  DecisionOutput<T> forward(const ClipWindow& window, const ParamStore<T>& store,
                            const Tensor<T>& phi, ForwardCache<T>* cache = nullptr) const;
  FramePrediction<T> predict_last(const ClipWindow& window, const ParamStore<T>& store,
                                  const Tensor<T>& phi) const;

  /// Accumulates parameter gradients into `grads` and d(phi) into `d_phi`.
  void backward(const ForwardCache<T>& cache, const OutputGradient<T>& grad,
                const ParamStore<T>& store, const Tensor<T>& phi, GradientSet<T>& grads,
                Tensor<T>& d_phi) const;

 private:
  struct BlockParams {
    std::size_t ln1_gain, ln1_shift, qkv_w, qv_b, out_w, out_b;
    std::size_t ln2_gain, ln2_shift, ffn1_w, ffn1_b, ffn2_w, ffn2_b;
  };

  void check_window(const ClipWindow& window) const;

  ModelConfig cfg_;
  TokenEmbedder<T> embedder_;
  std::size_t in_w_ = 0, in_b_ = 0, frame_table_ = 0;
  std::vector<BlockParams> blocks_;
  std::size_t final_gain_ = 0, final_shift_ = 0, fallback_ = 0;
  std::size_t trig_w_ = 0, trig_b_ = 0, tgt_w_ = 0, tgt_b_ = 0;
};

template <class T>
LossResult<T> compute_loss(const DecisionOutput<T>& output, const ClipLabels& labels,
                           const LossOptions& options = {});

/// Complete learnable stack: token embeddings, transformer, action encoder.
template <class T>
class DecisionNetwork {
 public:
  explicit DecisionNetwork(const ModelConfig& cfg);

  DecisionNetwork(const DecisionNetwork&) = default;
  DecisionNetwork& operator=(const DecisionNetwork&) = default;

  /// Weights ~ N(0, init_std) (residual projections scaled by
  /// 1/sqrt(2 * blocks)), biases and shifts 0, gains 1.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  const DecisionModel<T>& model() const { return model_; }
  const ActionEncoder<T>& action_encoder() const { return encoder_; }

  Tensor<T> encode_actions(const ActionCodebook& codebook, const UtteranceEmbedder& embedder,
                           ActionEncodingCache<T>* cache = nullptr) const {
    return encoder_.encode_all(codebook, embedder, params_, cache);
  }

  template <class U>
  DecisionNetwork<U> cast() const {
    DecisionNetwork<U> out(cfg_);
    out.params().assign_values(params_);
    out.params().set_step(params_.step());
    return out;
  }

 private:
  ModelConfig cfg_;
  ParamStore<T> params_;
  DecisionModel<T> model_;
  ActionEncoder<T> encoder_;
};

}  // namespace proact
