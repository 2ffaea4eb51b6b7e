// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/decision_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "proact/errors.hpp"

namespace proact {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void ModelConfig::validate() const {
  if (m == 0 || n == 0) throw ConfigError("model: m and n must be >= 1");
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw ConfigError("model: d_model (" + std::to_string(d_model) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  if (blocks == 0) throw ConfigError("model: at least one transformer block is required");
  if (feature_dim == 0 || position_dim == 0 || class_dim == 0)
    throw ConfigError("model: token component widths must be positive");
  if (position_bins < 1) throw ConfigError("model: position_bins must be >= 1");
  if (ffn_mult == 0) throw ConfigError("model: ffn_mult must be >= 1");
  if (expression_vocab < 1 || motion_vocab < 1) throw ConfigError("model: empty action vocabularies");
}

TokenLayout ModelConfig::token_layout() const {
  return {feature_dim, position_dim, class_dim, position_bins};
}

ActionEncoderConfig ModelConfig::action_config() const {
  ActionEncoderConfig a;
  a.utterance_dim = utterance_dim;
  a.expression_vocab = expression_vocab;
  a.motion_vocab = motion_vocab;
  a.expression_dim = expression_dim;
  a.motion_dim = motion_dim;
  a.hidden_dim = 2 * d_model;
  a.output_dim = d_model;
  return a;
}

Tensor<double> build_causal_mask(std::size_t m, std::size_t n, const std::vector<bool>* pad_mask) {
  const std::size_t total = m * n;
  if (pad_mask && pad_mask->size() != total) throw DimensionError("pad mask size != m*n");
  Tensor<double> mask(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (std::size_t a = 0; a < total; ++a) {
    for (std::size_t b = 0; b < total; ++b) {
      const bool visible = (b / m) <= (a / m) && !(pad_mask && (*pad_mask)[b]);
      mask(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = visible ? 0.0 : kMaskedLogit;
    }
  }
  return mask;
}

// --- model ---------------------------------------------------------------------

template <class T>
DecisionModel<T>::DecisionModel(const ModelConfig& cfg, ParamStore<T>& store)
    : cfg_(cfg), embedder_(cfg.token_layout(), store) {
  cfg.validate();
  using I = Eigen::Index;
  const auto d = static_cast<I>(cfg.d_model);
  const auto hidden = static_cast<I>(cfg.d_model * cfg.ffn_mult);
  in_w_ = store.add("model.input.weight", static_cast<I>(cfg.token_layout().token_dim()), d);
  in_b_ = store.add("model.input.bias", 1, d);
  frame_table_ = store.add("model.frame.table", static_cast<I>(cfg.n), d);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string p = "model.block" + std::to_string(b) + ".";
    BlockParams bp{};
    bp.ln1_gain = store.add(p + "ln1.gain", 1, d);
    bp.ln1_shift = store.add(p + "ln1.shift", 1, d);
    bp.qkv_w = store.add(p + "attn.qkv.weight", d, 3 * d);
    bp.qv_b = store.add(p + "attn.qv.bias", 1, 2 * d);
    bp.out_w = store.add(p + "attn.out.weight", d, d);
    bp.out_b = store.add(p + "attn.out.bias", 1, d);
    bp.ln2_gain = store.add(p + "ln2.gain", 1, d);
    bp.ln2_shift = store.add(p + "ln2.shift", 1, d);
    bp.ffn1_w = store.add(p + "ffn1.weight", d, hidden);
    bp.ffn1_b = store.add(p + "ffn1.bias", 1, hidden);
    bp.ffn2_w = store.add(p + "ffn2.weight", hidden, d);
    bp.ffn2_b = store.add(p + "ffn2.bias", 1, d);
    blocks_.push_back(bp);
  }
  final_gain_ = store.add("model.final_ln.gain", 1, d);
  final_shift_ = store.add("model.final_ln.shift", 1, d);
  fallback_ = store.add("model.pool_fallback.vector", 1, d);
  trig_w_ = store.add("model.trigger.weight", d, 1);
  trig_b_ = store.add("model.trigger.bias", 1, 1);
  tgt_w_ = store.add("model.target.weight", d, 1);
  tgt_b_ = store.add("model.target.bias", 1, 1);
}

template <class T>
void DecisionModel<T>::check_window(const ClipWindow& w) const {
  if (w.m != cfg_.m || w.n != cfg_.n)
    throw DimensionError("window " + std::to_string(w.m) + "x" + std::to_string(w.n) +
                         " does not match model " + std::to_string(cfg_.m) + "x" +
                         std::to_string(cfg_.n));
  if (w.objects.size() != w.m * w.n || w.pad_mask.size() != w.m * w.n)
    throw DimensionError("window token grid is not m*n");
}

template <class T>
DecisionOutput<T> DecisionModel<T>::forward(const ClipWindow& w, const ParamStore<T>& P,
                                            const Tensor<T>& phi, ForwardCache<T>* cache) const {
  check_window(w);
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  if (phi.cols() != d)
    throw DimensionError("action matrix " + shape_string(phi) + " must have " + std::to_string(d) +
                         " columns");
  const std::size_t n = cfg_.n;
  const std::size_t m = cfg_.m;
  const auto dh = static_cast<Eigen::Index>(cfg_.d_model / cfg_.heads);

  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  c = ForwardCache<T>{};
  c.window = &w;

  c.frame_begin.assign(n + 1, 0);
  for (std::size_t f = 0; f < n; ++f) {
    c.frame_begin[f] = c.slots.size();
    for (std::size_t s = 0; s < m; ++s) {
      if (w.padded(f, s)) continue;
      c.slots.push_back(f * m + s);
      c.frames.push_back(static_cast<int>(f));
    }
  }
  c.frame_begin[n] = c.slots.size();
  const auto S = static_cast<Eigen::Index>(c.slots.size());

  c.tokens.resize(S, static_cast<Eigen::Index>(cfg_.token_layout().token_dim()));
  for (Eigen::Index i = 0; i < S; ++i)
    embedder_.assemble(w.objects[c.slots[static_cast<std::size_t>(i)]], P, c.tokens.row(i));

  Tensor<T> h;
  if (S > 0) {
    h = linear<T>(c.tokens, P.value(in_w_), P.value(in_b_));
    const auto& frame_table = P.value(frame_table_);
    for (Eigen::Index i = 0; i < S; ++i) h.row(i) += frame_table.row(c.frames[static_cast<std::size_t>(i)]);

    c.mask.resize(S, S);
    for (Eigen::Index a = 0; a < S; ++a)
      for (Eigen::Index b = 0; b < S; ++b)
        c.mask(a, b) = c.frames[static_cast<std::size_t>(b)] <= c.frames[static_cast<std::size_t>(a)]
                           ? T(0)
                           : T(kMaskedLogit);

    c.blocks.resize(blocks_.size());
    const T eps = static_cast<T>(cfg_.ln_eps);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& bp = blocks_[b];
      auto& bc = c.blocks[b];
      bc.input = std::move(h);
      bc.normed1 = layer_norm<T>(bc.input, P.value(bp.ln1_gain), P.value(bp.ln1_shift), eps, &bc.ln1);
      // No key bias: it shifts every score of a query equally and cancels in the softmax.
      bc.qkv = bc.normed1 * P.value(bp.qkv_w);
      bc.qkv.leftCols(d).rowwise() += P.value(bp.qv_b).leftCols(d).row(0);
      bc.qkv.rightCols(d).rowwise() += P.value(bp.qv_b).rightCols(d).row(0);
      bc.ctx.resize(S, d);
      bc.heads.resize(cfg_.heads);
      for (std::size_t hd = 0; hd < cfg_.heads; ++hd) {
        const auto off = static_cast<Eigen::Index>(hd) * dh;
        bc.ctx.middleCols(off, dh) =
            attention<T>(bc.qkv.middleCols(off, dh), bc.qkv.middleCols(d + off, dh),
                         bc.qkv.middleCols(2 * d + off, dh), c.mask, &bc.heads[hd]);
      }
      bc.mid = bc.input + linear<T>(bc.ctx, P.value(bp.out_w), P.value(bp.out_b));
      bc.normed2 = layer_norm<T>(bc.mid, P.value(bp.ln2_gain), P.value(bp.ln2_shift), eps, &bc.ln2);
      bc.hidden = linear<T>(bc.normed2, P.value(bp.ffn1_w), P.value(bp.ffn1_b));
      bc.act = gelu<T>(bc.hidden);
      h = bc.mid + linear<T>(bc.act, P.value(bp.ffn2_w), P.value(bp.ffn2_b));
    }
    c.final_input = std::move(h);
    c.encoded = layer_norm<T>(c.final_input, P.value(final_gain_), P.value(final_shift_), eps,
                              &c.final_ln);
  }

  DecisionOutput<T> out;
  out.m = m;
  out.n = n;
  out.warm_up = w.warm_up;
  out.fallback_frames.assign(n, false);

  c.pooled.resize(static_cast<Eigen::Index>(n), d);
  c.argmax.assign(n, std::vector<int>(static_cast<std::size_t>(d), -1));
  for (std::size_t f = 0; f < n; ++f) {
    const auto begin = static_cast<Eigen::Index>(c.frame_begin[f]);
    const auto end = static_cast<Eigen::Index>(c.frame_begin[f + 1]);
    const auto fi = static_cast<Eigen::Index>(f);
    if (begin == end) {
      c.pooled.row(fi) = P.value(fallback_).row(0);
      out.fallback_frames[f] = true;
      continue;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::Index best = begin;
      T val = c.encoded(begin, j);
      for (Eigen::Index r = begin + 1; r < end; ++r) {
        if (c.encoded(r, j) > val) {
          val = c.encoded(r, j);
          best = r;
        }
      }
      c.pooled(fi, j) = val;
      c.argmax[f][static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
  }

  const Tensor<T> trig = linear<T>(c.pooled, P.value(trig_w_), P.value(trig_b_));
  out.trigger_logit = trig.col(0).transpose();
  out.trigger = out.trigger_logit.unaryExpr([](T v) { return sigmoid(v); });

  const T tgt_bias = P.value(tgt_b_)(0, 0);
  out.target_logit = Tensor<T>::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m), tgt_bias);
  if (S > 0) {
    const Tensor<T> tl = linear<T>(c.encoded, P.value(tgt_w_), P.value(tgt_b_));
    for (Eigen::Index i = 0; i < S; ++i) {
      const std::size_t slot = c.slots[static_cast<std::size_t>(i)];
      out.target_logit(static_cast<Eigen::Index>(slot / m), static_cast<Eigen::Index>(slot % m)) = tl(i, 0);
    }
  }
  out.target = sigmoid<T>(out.target_logit);

  out.action_logit = c.pooled * phi.transpose();
  out.action_dist = out.action_logit;
  softmax_rows_inplace(out.action_dist);
  return out;
}

template <class T>
FramePrediction<T> DecisionModel<T>::predict_last(const ClipWindow& w, const ParamStore<T>& P,
                                                  const Tensor<T>& phi) const {
  const auto out = forward(w, P, phi);
  const auto last = static_cast<Eigen::Index>(cfg_.n - 1);
  FramePrediction<T> pred;
  pred.trigger = out.trigger[last];
  pred.target = out.target.row(last);
  pred.action_dist = out.action_dist.row(last);
  pred.fallback = out.fallback_frames.back();
  pred.warm_up = out.warm_up;
  return pred;
}

template <class T>
void DecisionModel<T>::backward(const ForwardCache<T>& c, const OutputGradient<T>& g,
                                const ParamStore<T>& P, const Tensor<T>& phi,
                                GradientSet<T>& grads, Tensor<T>& d_phi) const {
  const std::size_t n = cfg_.n;
  const std::size_t m = cfg_.m;
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  const auto dh = static_cast<Eigen::Index>(cfg_.d_model / cfg_.heads);
  const auto S = static_cast<Eigen::Index>(c.slots.size());

  // Heads.
  const Tensor<T> d_trig = g.trigger_logit.transpose();
  Tensor<T> d_pooled = linear_backward<T>(c.pooled, P.value(trig_w_), d_trig, grads[trig_w_], grads[trig_b_]);
  d_pooled.noalias() += g.action_logit * phi;
  d_phi.noalias() += g.action_logit.transpose() * c.pooled;

  Tensor<T> d_enc = Tensor<T>::Zero(S, d);
  T pad_bias_grad = T(0);
  std::vector<bool> real(n * m, false);
  for (auto slot : c.slots) real[slot] = true;
  for (std::size_t slot = 0; slot < n * m; ++slot)
    if (!real[slot])
      pad_bias_grad += g.target_logit(static_cast<Eigen::Index>(slot / m), static_cast<Eigen::Index>(slot % m));
  grads[tgt_b_](0, 0) += pad_bias_grad;
  if (S > 0) {
    Tensor<T> d_tl(S, 1);
    for (Eigen::Index i = 0; i < S; ++i) {
      const std::size_t slot = c.slots[static_cast<std::size_t>(i)];
      d_tl(i, 0) = g.target_logit(static_cast<Eigen::Index>(slot / m), static_cast<Eigen::Index>(slot % m));
    }
    d_enc = linear_backward<T>(c.encoded, P.value(tgt_w_), d_tl, grads[tgt_w_], grads[tgt_b_]);
  }

  // Max pooling.
  for (std::size_t f = 0; f < n; ++f) {
    const auto fi = static_cast<Eigen::Index>(f);
    for (Eigen::Index j = 0; j < d; ++j) {
      const int r = c.argmax[f][static_cast<std::size_t>(j)];
      if (r < 0)
        grads[fallback_](0, j) += d_pooled(fi, j);
      else
        d_enc(r, j) += d_pooled(fi, j);
    }
  }
  if (S == 0) return;

  Tensor<T> dh_res = layer_norm_backward<T>(c.final_ln, P.value(final_gain_), d_enc, grads[final_gain_],
                                            grads[final_shift_]);

  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const auto& bp = blocks_[bi];
    const auto& bc = c.blocks[bi];
    Tensor<T> d_act = linear_backward<T>(bc.act, P.value(bp.ffn2_w), dh_res, grads[bp.ffn2_w], grads[bp.ffn2_b]);
    Tensor<T> d_hidden = gelu_backward<T>(bc.hidden, d_act);
    Tensor<T> d_norm2 =
        linear_backward<T>(bc.normed2, P.value(bp.ffn1_w), d_hidden, grads[bp.ffn1_w], grads[bp.ffn1_b]);
    Tensor<T> d_mid = dh_res + layer_norm_backward<T>(bc.ln2, P.value(bp.ln2_gain), d_norm2,
                                                      grads[bp.ln2_gain], grads[bp.ln2_shift]);
    Tensor<T> d_ctx = linear_backward<T>(bc.ctx, P.value(bp.out_w), d_mid, grads[bp.out_w], grads[bp.out_b]);
    Tensor<T> d_qkv(S, 3 * d);
    for (std::size_t hd = 0; hd < cfg_.heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd) * dh;
      auto ag = attention_backward<T>(bc.qkv.middleCols(off, dh), bc.qkv.middleCols(d + off, dh),
                                      bc.qkv.middleCols(2 * d + off, dh), bc.heads[hd],
                                      d_ctx.middleCols(off, dh));
      d_qkv.middleCols(off, dh) = ag.dq;
      d_qkv.middleCols(d + off, dh) = ag.dk;
      d_qkv.middleCols(2 * d + off, dh) = ag.dv;
    }
    grads[bp.qkv_w].noalias() += bc.normed1.transpose() * d_qkv;
    grads[bp.qv_b].leftCols(d) += d_qkv.leftCols(d).colwise().sum();
    grads[bp.qv_b].rightCols(d) += d_qkv.rightCols(d).colwise().sum();
    const Tensor<T> d_norm1 = d_qkv * P.value(bp.qkv_w).transpose();
    dh_res = d_mid + layer_norm_backward<T>(bc.ln1, P.value(bp.ln1_gain), d_norm1, grads[bp.ln1_gain],
                                            grads[bp.ln1_shift]);
  }

  auto& g_frame = grads[frame_table_];
  for (Eigen::Index i = 0; i < S; ++i) g_frame.row(c.frames[static_cast<std::size_t>(i)]) += dh_res.row(i);
  const Tensor<T> d_tokens = linear_backward<T>(c.tokens, P.value(in_w_), dh_res, grads[in_w_], grads[in_b_]);
  for (Eigen::Index i = 0; i < S; ++i)
    embedder_.backward(c.window->objects[c.slots[static_cast<std::size_t>(i)]], d_tokens.row(i), grads);
}

// --- loss ----------------------------------------------------------------------

template <class T>
LossResult<T> compute_loss(const DecisionOutput<T>& out, const ClipLabels& labels,
                           const LossOptions& options) {
  const std::size_t n = out.n;
  const std::size_t m = out.m;
  const auto k1 = out.action_logit.cols();
  if (labels.trigger.size() != n || labels.action.size() != n || labels.target.size() != n * m ||
      labels.target_eligible.size() != n * m)
    throw TrainingError("clip labels are not aligned with the " + std::to_string(m) + "x" +
                        std::to_string(n) + " window");

  LossResult<T> r;
  r.grad.trigger_logit = RowVector<T>::Zero(static_cast<Eigen::Index>(n));
  r.grad.target_logit = Tensor<T>::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  r.grad.action_logit = Tensor<T>::Zero(static_cast<Eigen::Index>(n), k1);
  const std::size_t first = options.final_frame_only ? n - 1 : 0;
  const T null_w = static_cast<T>(options.null_action_weight);
  RowVector<T> d_logits;
  for (std::size_t t = first; t < n; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    const int y = labels.trigger[t];
    if (y != 0 && y != 1) throw LabelError("trigger label must be 0 or 1");
    T dz{};
    r.trigger += bce_with_logit<T>(T(y), out.trigger_logit[ti], dz);
    r.grad.trigger_logit[ti] = dz;

    if (y == 1) {
      const std::size_t a = labels.action[t];
      if (static_cast<Eigen::Index>(a) >= k1) throw LabelError("action label outside codebook");
      r.action += softmax_ce_with_logits<T>(static_cast<Eigen::Index>(a), out.action_logit.row(ti), d_logits);
      r.grad.action_logit.row(ti) = d_logits;
      for (std::size_t s = 0; s < m; ++s) {
        const std::size_t slot = t * m + s;
        if (!labels.target_eligible[slot]) continue;
        const int h = labels.target[slot];
        if (h != 0 && h != 1) throw LabelError("target label must be 0 or 1");
        T dt{};
        r.target += bce_with_logit<T>(T(h), out.target_logit(ti, static_cast<Eigen::Index>(s)), dt);
        r.grad.target_logit(ti, static_cast<Eigen::Index>(s)) = dt;
      }
    } else if (null_w > T(0)) {
      r.action += null_w * softmax_ce_with_logits<T>(k1 - 1, out.action_logit.row(ti), d_logits);
      r.grad.action_logit.row(ti) = d_logits * null_w;
    }
  }
  r.total = r.trigger + r.action + r.target;
  return r;
}

// --- network -------------------------------------------------------------------

template <class T>
DecisionNetwork<T>::DecisionNetwork(const ModelConfig& cfg)
    : cfg_(cfg), model_(cfg, params_), encoder_(cfg.action_config(), params_) {}

template <class T>
void DecisionNetwork<T>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg_.blocks));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_.at(i);
    if (ends_with(p.name, ".bias") || ends_with(p.name, ".shift")) {
      p.value.setZero();
    } else if (ends_with(p.name, ".gain")) {
      p.value.setOnes();
    } else {
      double stddev = cfg_.init_std;
      if (ends_with(p.name, "attn.out.weight") ||
          (p.name.rfind("model.block", 0) == 0 && ends_with(p.name, "ffn2.weight")))
        stddev *= residual_scale;
      fill_normal(p.value, stddev, rng);
    }
    p.grad.setZero();
  }
  params_.set_step(0);
}

template class DecisionModel<float>;
template class DecisionModel<double>;
template class DecisionNetwork<float>;
template class DecisionNetwork<double>;
template LossResult<float> compute_loss(const DecisionOutput<float>&, const ClipLabels&, const LossOptions&);
template LossResult<double> compute_loss(const DecisionOutput<double>&, const ClipLabels&, const LossOptions&);

}  // namespace proact
