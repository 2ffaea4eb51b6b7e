// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/action_codebook.hpp"

#include <cctype>
#include <cmath>

#include "proact/errors.hpp"

namespace proact {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize_utterance(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<double> stub_embed(std::string_view text, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  if (dim == 0) return v;
  for (const auto& tok : tokenize_utterance(text)) v[fnv1a64(tok) % dim] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::unique_ptr<UtteranceEmbedder> make_embedder(std::string_view id, std::size_t dim) {
  if (id == "hashed-bag-fnv1a64") return std::make_unique<HashedBagEmbedder>(dim);
  throw ConfigError("unknown utterance embedder '" + std::string(id) + "'");
}

// --- codebook ------------------------------------------------------------------

ActionCodebook ActionCodebook::build(std::span<const MultiModalAction> annotated) {
  if (annotated.empty()) throw ConfigError("cannot build an action codebook from zero annotations");
  std::vector<MultiModalAction> unique;
  std::map<MultiModalAction, std::size_t> seen;
  for (const auto& a : annotated) {
    if (a.utterance.empty()) throw InputError("annotated action has an empty utterance");
    if (seen.emplace(a, unique.size()).second) unique.push_back(a);
  }
  return from_actions(std::move(unique));
}

ActionCodebook ActionCodebook::from_actions(std::vector<MultiModalAction> actions) {
  ActionCodebook cb;
  for (std::size_t k = 0; k < actions.size(); ++k)
    if (!cb.index_.emplace(actions[k], k).second)
      throw ConfigError("duplicate action '" + actions[k].utterance + "' in codebook");
  cb.actions_ = std::move(actions);
  return cb;
}

std::optional<std::size_t> ActionCodebook::find(const MultiModalAction& a) const {
  auto it = index_.find(a);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ActionCodebook::index_of(const MultiModalAction& a) const {
  auto k = find(a);
  if (!k) throw LabelError("action '" + a.utterance + "' is not in the codebook");
  return *k;
}

// --- encoder -------------------------------------------------------------------

template <class T>
ActionEncoder<T>::ActionEncoder(const ActionEncoderConfig& cfg, ParamStore<T>& store) : cfg_(cfg) {
  using I = Eigen::Index;
  expr_ = store.add("action.expression.table", cfg.expression_vocab, static_cast<I>(cfg.expression_dim));
  motion_ = store.add("action.motion.table", cfg.motion_vocab, static_cast<I>(cfg.motion_dim));
  w1_ = store.add("action.ffn1.weight", static_cast<I>(cfg.input_dim()), static_cast<I>(cfg.hidden_dim));
  b1_ = store.add("action.ffn1.bias", 1, static_cast<I>(cfg.hidden_dim));
  w2_ = store.add("action.ffn2.weight", static_cast<I>(cfg.hidden_dim), static_cast<I>(cfg.output_dim));
  b2_ = store.add("action.ffn2.bias", 1, static_cast<I>(cfg.output_dim));
  null_ = store.add("action.null.vector", 1, static_cast<I>(cfg.output_dim));
}

template <class T>
void ActionEncoder<T>::check_vocab(const MultiModalAction& a) const {
  if (a.expression_id < 0 || a.expression_id >= cfg_.expression_vocab)
    throw InputError("expression id " + std::to_string(a.expression_id) + " outside vocabulary");
  if (a.motion_id < 0 || a.motion_id >= cfg_.motion_vocab)
    throw InputError("motion id " + std::to_string(a.motion_id) + " outside vocabulary");
}

template <class T>
RowVector<T> ActionEncoder<T>::ffn_input(const MultiModalAction& a,
                                         const UtteranceEmbedder& embedder,
                                         const ParamStore<T>& store) const {
  check_vocab(a);
  if (embedder.dimension() != cfg_.utterance_dim)
    throw DimensionError("utterance embedder dimension " + std::to_string(embedder.dimension()) +
                         " != " + std::to_string(cfg_.utterance_dim));
  const auto e = static_cast<Eigen::Index>(cfg_.utterance_dim);
  const auto fe = static_cast<Eigen::Index>(cfg_.expression_dim);
  const auto me = static_cast<Eigen::Index>(cfg_.motion_dim);
  RowVector<T> x(e + fe + me);
  const auto u = embedder.embed(a.utterance);
  for (Eigen::Index i = 0; i < e; ++i) x[i] = static_cast<T>(u[static_cast<std::size_t>(i)]);
  x.segment(e, fe) = store.value(expr_).row(a.expression_id);
  x.segment(e + fe, me) = store.value(motion_).row(a.motion_id);
  return x;
}

template <class T>
RowVector<T> ActionEncoder<T>::encode_action(const MultiModalAction& a,
                                             const UtteranceEmbedder& embedder,
                                             const ParamStore<T>& store) const {
  Tensor<T> x = ffn_input(a, embedder, store);
  Tensor<T> h = gelu<T>(linear<T>(x, store.value(w1_), store.value(b1_)));
  return linear<T>(h, store.value(w2_), store.value(b2_));
}

template <class T>
Tensor<T> ActionEncoder<T>::encode_all(const ActionCodebook& codebook,
                                       const UtteranceEmbedder& embedder,
                                       const ParamStore<T>& store,
                                       ActionEncodingCache<T>* cache) const {
  const auto k = static_cast<Eigen::Index>(codebook.size());
  const auto d = static_cast<Eigen::Index>(cfg_.output_dim);
  Tensor<T> input(k, static_cast<Eigen::Index>(cfg_.input_dim()));
  for (Eigen::Index i = 0; i < k; ++i)
    input.row(i) = ffn_input(codebook.at(static_cast<std::size_t>(i)), embedder, store);
  Tensor<T> hidden = linear<T>(input, store.value(w1_), store.value(b1_));
  Tensor<T> act = gelu<T>(hidden);
  Tensor<T> phi(k + 1, d);
  if (k > 0) phi.topRows(k) = linear<T>(act, store.value(w2_), store.value(b2_));
  phi.row(k) = store.value(null_).row(0);
  if (cache) {
    cache->input = std::move(input);
    cache->hidden = std::move(hidden);
    cache->act = std::move(act);
    cache->actions = codebook.actions();
  }
  return phi;
}

template <class T>
void ActionEncoder<T>::backward(const ActionEncodingCache<T>& cache, const Tensor<T>& d_phi,
                                const ParamStore<T>& store, GradientSet<T>& grads) const {
  const auto k = cache.input.rows();
  if (d_phi.rows() != k + 1) throw DimensionError("action gradient has wrong row count");
  grads[null_].row(0) += d_phi.row(k);
  if (k == 0) return;
  const Tensor<T> d_real = d_phi.topRows(k);
  Tensor<T> d_act = linear_backward<T>(cache.act, store.value(w2_), d_real, grads[w2_], grads[b2_]);
  Tensor<T> d_hidden = gelu_backward<T>(cache.hidden, d_act);
  Tensor<T> d_input =
      linear_backward<T>(cache.input, store.value(w1_), d_hidden, grads[w1_], grads[b1_]);
  const auto e = static_cast<Eigen::Index>(cfg_.utterance_dim);
  const auto fe = static_cast<Eigen::Index>(cfg_.expression_dim);
  const auto me = static_cast<Eigen::Index>(cfg_.motion_dim);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& a = cache.actions[static_cast<std::size_t>(i)];
    grads[expr_].row(a.expression_id) += d_input.row(i).segment(e, fe);
    grads[motion_].row(a.motion_id) += d_input.row(i).segment(e + fe, me);
  }
}

template class ActionEncoder<float>;
template class ActionEncoder<double>;

}  // namespace proact
