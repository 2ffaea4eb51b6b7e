// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Forward and backward rules for the fixed operation set used by the
// decision model: matmul/linear, softmax, sigmoid, cross-entropy,
// layer norm, GELU and masked scaled-dot-product attention.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "proact/errors.hpp"
#include "proact/tensor.hpp"

namespace proact {

/// Additive value for hidden attention entries. exp() of it underflows to
/// exactly zero in both precisions.
inline constexpr double kMaskedLogit = -1e9;

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

template <class T>
using ConstRef = Eigen::Ref<const Tensor<T>>;

// --- matmul / linear -----------------------------------------------------------

template <class T>
Tensor<T> matmul(const ConstRef<T>& a, const ConstRef<T>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_string(a.rows(), a.cols()) + " x " + shape_string(b.rows(), b.cols()));
  return a * b;
}

/// y = x W + b with W shaped (in x out) and b a 1 x out row.
template <class T>
Tensor<T> linear(const ConstRef<T>& x, const ConstRef<T>& w, const ConstRef<T>& b) {
  Tensor<T> y = matmul<T>(x, w);
  y.rowwise() += b.row(0);
  return y;
}

/// Accumulates into dw/db, returns dx.
template <class T>
Tensor<T> linear_backward(const ConstRef<T>& x, const ConstRef<T>& w, const ConstRef<T>& dy,
                          Tensor<T>& dw, Tensor<T>& db) {
  dw.noalias() += x.transpose() * dy;
  db.row(0) += dy.colwise().sum();
  return dy * w.transpose();
}

// --- softmax / sigmoid ---------------------------------------------------------

template <class T>
RowVector<T> softmax(const Eigen::Ref<const RowVector<T>>& x) {
  const T mx = x.maxCoeff();
  RowVector<T> e = (x.array() - mx).exp().matrix();
  return e / e.sum();
}

template <class T>
void softmax_rows_inplace(Tensor<T>& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const T mx = row.maxCoeff();
    row = (row.array() - mx).exp().matrix();
    row /= row.sum();
  }
}

/// Given p = softmax(z) and dL/dp, returns dL/dz.
template <class T>
RowVector<T> softmax_backward(const Eigen::Ref<const RowVector<T>>& p,
                              const Eigen::Ref<const RowVector<T>>& dp) {
  const T dot = p.dot(dp);
  return (p.array() * (dp.array() - dot)).matrix();
}

template <class T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
Tensor<T> sigmoid(const ConstRef<T>& x) {
  return x.unaryExpr([](T v) { return sigmoid(v); });
}

// --- cross-entropy -------------------------------------------------------------

template <class T>
T clamp_probability(T p) {
  return std::clamp(p, T(kProbabilityClamp), T(1.0 - kProbabilityClamp));
}

template <class T>
struct CrossEntropy {
  T loss;
  RowVector<T> grad;  // dL/d(predicted)
};

/// -sum t_i ln(clamp(p_i)). The target must be a distribution.
template <class T>
CrossEntropy<T> cross_entropy(const Eigen::Ref<const RowVector<T>>& target,
                              const Eigen::Ref<const RowVector<T>>& predicted) {
  if (target.size() != predicted.size())
    throw DimensionError("cross_entropy: target length " + std::to_string(target.size()) +
                         " vs predicted length " + std::to_string(predicted.size()));
  if ((target.array() < T(0)).any() || std::abs(double(target.sum()) - 1.0) > 1e-6)
    throw LabelError("cross_entropy: target does not sum to 1");
  CrossEntropy<T> out{T(0), RowVector<T>::Zero(predicted.size())};
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    if (target[i] == T(0)) continue;
    const T p = predicted[i];
    const T pc = clamp_probability(p);
    out.loss -= target[i] * std::log(pc);
    if (pc == p) out.grad[i] = -target[i] / p;
  }
  return out;
}

template <class T>
struct BinaryCrossEntropy {
  T loss;
  T grad;  // dL/d(predicted)
};

template <class T>
BinaryCrossEntropy<T> binary_cross_entropy(T target, T predicted) {
  if (target < T(0) || target > T(1)) throw LabelError("binary_cross_entropy: target outside [0,1]");
  const T pc = clamp_probability(predicted);
  BinaryCrossEntropy<T> out{-(target * std::log(pc) + (T(1) - target) * std::log(T(1) - pc)), T(0)};
  if (pc == predicted) out.grad = -target / predicted + (T(1) - target) / (T(1) - predicted);
  return out;
}

/// Binary cross-entropy of sigmoid(logit). The value uses the clamped
/// probability; the returned logit gradient is p - target.
template <class T>
T bce_with_logit(T target, T logit, T& d_logit) {
  const T p = sigmoid(logit);
  d_logit = p - target;
  const T pc = clamp_probability(p);
  return -(target * std::log(pc) + (T(1) - target) * std::log(T(1) - pc));
}

/// Cross-entropy of softmax(logits) against a one-hot class. Value uses the
/// clamped probability; the logit gradient is p - onehot.
template <class T>
T softmax_ce_with_logits(Eigen::Index target_class, const Eigen::Ref<const RowVector<T>>& logits,
                         RowVector<T>& d_logits) {
  d_logits = softmax<T>(logits);
  const T loss = -std::log(clamp_probability(d_logits[target_class]));
  d_logits[target_class] -= T(1);
  return loss;
}

// --- layer norm ----------------------------------------------------------------

template <class T>
struct LayerNormCache {
  Tensor<T> xhat;
  Vector<T> rstd;
};

template <class T>
Tensor<T> layer_norm(const ConstRef<T>& x, const ConstRef<T>& gamma, const ConstRef<T>& beta, T eps,
                     LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gamma.cols() != d || beta.cols() != d)
    throw DimensionError("layer_norm: gamma/beta " + shape_string(gamma.rows(), gamma.cols()) +
                         " vs input " + shape_string(n, d));
  Tensor<T> xhat(n, d);
  Vector<T> rstd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).matrix();
    const T var = centered.squaredNorm() / T(d);
    rstd[r] = T(1) / std::sqrt(var + eps);
    xhat.row(r) = centered * rstd[r];
  }
  Tensor<T> y = (xhat.array().rowwise() * gamma.row(0).array()).matrix();
  y.rowwise() += beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <class T>
Tensor<T> layer_norm_backward(const LayerNormCache<T>& cache, const ConstRef<T>& gamma,
                              const ConstRef<T>& dy, Tensor<T>& dgamma, Tensor<T>& dbeta) {
  const Eigen::Index d = dy.cols();
  dgamma.row(0) += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  dbeta.row(0) += dy.colwise().sum();
  Tensor<T> dxhat = (dy.array().rowwise() * gamma.row(0).array()).matrix();
  Tensor<T> dx(dy.rows(), d);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T s1 = dxhat.row(r).sum();
    const T s2 = dxhat.row(r).dot(cache.xhat.row(r));
    dx.row(r) = ((dxhat.row(r).array() * T(d) - s1 - cache.xhat.row(r).array() * s2) *
                 (cache.rstd[r] / T(d)))
                    .matrix();
  }
  return dx;
}

// --- GELU (tanh form) ----------------------------------------------------------

template <class T>
T gelu(T x) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
  const T inner = c * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <class T>
T gelu_derivative(T x) {
  constexpr T c = T(0.7978845608028654);
  const T x2 = x * x;
  const T t = std::tanh(c * (x + T(0.044715) * x2 * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3 * 0.044715) * x2);
}

template <class T>
Tensor<T> gelu(const ConstRef<T>& x) {
  return x.unaryExpr([](T v) { return gelu(v); });
}

template <class T>
Tensor<T> gelu_backward(const ConstRef<T>& x, const ConstRef<T>& dy) {
  return (dy.array() * x.unaryExpr([](T v) { return gelu_derivative(v); }).array()).matrix();
}

// --- attention -----------------------------------------------------------------

template <class T>
struct AttentionCache {
  Tensor<T> probs;  // queries x keys
};

/// softmax(Q K^T / sqrt(d) + mask) V for one head.
template <class T>
Tensor<T> attention(const ConstRef<T>& q, const ConstRef<T>& k, const ConstRef<T>& v,
                    const ConstRef<T>& additive_mask, AttentionCache<T>* cache = nullptr) {
  if (q.cols() != k.cols())
    throw DimensionError("attention: query width " + shape_string(q.rows(), q.cols()) +
                         " vs key width " + shape_string(k.rows(), k.cols()));
  if (k.rows() != v.rows())
    throw DimensionError("attention: keys " + shape_string(k.rows(), k.cols()) + " vs values " +
                         shape_string(v.rows(), v.cols()));
  if (additive_mask.rows() != q.rows() || additive_mask.cols() != k.rows())
    throw DimensionError("attention: mask " +
                         shape_string(additive_mask.rows(), additive_mask.cols()) + " expected " +
                         shape_string(q.rows(), k.rows()));
  const T scale = T(1) / std::sqrt(T(q.cols()));
  Tensor<T> scores = (q * k.transpose()) * scale;
  scores += additive_mask;
  softmax_rows_inplace(scores);
  Tensor<T> out = scores * v;
  if (cache) cache->probs = std::move(scores);
  return out;
}

template <class T>
struct AttentionGrads {
  Tensor<T> dq, dk, dv;
};

template <class T>
AttentionGrads<T> attention_backward(const ConstRef<T>& q, const ConstRef<T>& k,
                                     const ConstRef<T>& v, const AttentionCache<T>& cache,
                                     const ConstRef<T>& dout) {
  const T scale = T(1) / std::sqrt(T(q.cols()));
  const Tensor<T>& p = cache.probs;
  AttentionGrads<T> g;
  g.dv = p.transpose() * dout;
  Tensor<T> dp = dout * v.transpose();
  const Vector<T> rowdot = (dp.array() * p.array()).rowwise().sum();
  Tensor<T> ds = (p.array() * (dp.array().colwise() - rowdot.array())).matrix() * scale;
  g.dq = ds * k;
  g.dk = ds.transpose() * q;
  return g;
}

}  // namespace proact
