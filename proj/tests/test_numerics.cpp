// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "proact/gradcheck.hpp"
#include "proact/ops.hpp"
#include "proact/optimizer.hpp"

namespace proact {
namespace {

using Td = Tensor<double>;
using Rd = RowVector<double>;

Td random_tensor(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  Td t(r, c);
  fill_normal(t, scale, rng);
  return t;
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  std::mt19937_64 rng(1);
  const Td a = random_tensor(3, 4, rng);
  EXPECT_EQ(matmul<double>(Td::Identity(3, 3), a), a);
}

TEST(Matmul, HandComputedProduct) {
  Td a(2, 3), b(3, 1);
  a << 1, 2, 3, 4, 5, 6;
  b << 7, 8, 9;
  const Td c = matmul<double>(a, b);
  EXPECT_EQ(c(0, 0), 50.0);
  EXPECT_EQ(c(1, 0), 122.0);
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul<double>(Td::Zero(2, 3), Td::Zero(2, 3));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
}

TEST(Softmax, SymmetricAndOverflowSafe) {
  Rd x(2);
  x << 0, 0;
  EXPECT_DOUBLE_EQ(softmax<double>(x)[0], 0.5);
  Rd big = Rd::Constant(3, 1000.0);
  const Rd p = softmax<double>(big);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesHighPrecisionOracle) {
  Rd x(3);
  x << 1, 2, 3;
  const Rd p = softmax<double>(x);
  EXPECT_NEAR(p[0], 0.0900305731703804579980, 1e-15);
  EXPECT_NEAR(p[1], 0.2447284710547976524730, 1e-15);
  EXPECT_NEAR(p[2], 0.6652409557748218895290, 1e-15);
}

TEST(Softmax, SumsToOneOverWideMagnitudes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(-4.0, 4.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Rd x(1 + trial % 17);
    const double scale = std::pow(10.0, mag(rng));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::normal_distribution<double>(0, scale)(rng);
    const Rd p = softmax<double>(x);
    ASSERT_NEAR(p.sum(), 1.0, 1e-9);
    ASSERT_TRUE((p.array() >= 0).all());
    const Rd shifted = softmax<double>((x.array() + 3.5).matrix());
    ASSERT_LT((shifted - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sigmoid, ZeroSymmetryAndOracle) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const double x = std::normal_distribution<double>(0, 20)(rng);
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-12);
  }
  EXPECT_NEAR(sigmoid(2.0), 0.880797077977882444059729, 1e-15);
  EXPECT_LT(sigmoid(-1.0), sigmoid(-0.5));
}

TEST(CrossEntropy, AnalyticValues) {
  Rd t(2), p(2);
  t << 1, 0;
  p << 1 - kProbabilityClamp, kProbabilityClamp;
  EXPECT_NEAR(cross_entropy<double>(t, p).loss, 0.0, 1e-6);
  EXPECT_NEAR(binary_cross_entropy(1.0, 0.5).loss, std::log(2.0), 1e-15);
}

TEST(CrossEntropy, MatchesDirectSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Rd a = random_tensor(1, 6, rng);
    Rd b = random_tensor(1, 6, rng);
    const Rd t = softmax<double>(a), p = softmax<double>(b);
    double oracle = 0.0;
    for (int i = 0; i < 6; ++i) oracle -= t[i] * std::log(p[i]);
    EXPECT_NEAR(cross_entropy<double>(t, p).loss, oracle, 1e-12);
  }
}

TEST(CrossEntropy, RejectsUnnormalizedTarget) {
  Rd t(2), p(2);
  t << 0.7, 0.7;
  p << 0.5, 0.5;
  EXPECT_THROW(cross_entropy<double>(t, p), LabelError);
}

TEST(CrossEntropy, SoftmaxGradientIsPMinusOnehot) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Rd z = random_tensor(1, 5, rng, 3.0);
    const Eigen::Index cls = trial % 5;
    Rd d;
    softmax_ce_with_logits<double>(cls, z, d);
    Rd oracle = softmax<double>(z);
    oracle[cls] -= 1.0;
    ASSERT_LT((d - oracle).cwiseAbs().maxCoeff(), 1e-9);
    // Chain through cross_entropy's probability gradient as an independent path.
    Rd t = Rd::Zero(5);
    t[cls] = 1.0;
    const Rd p = softmax<double>(z);
    if (p[cls] <= kProbabilityClamp) continue;  // clamped: probability gradient is cut
    const Rd chained = softmax_backward<double>(p, cross_entropy<double>(t, p).grad);
    ASSERT_LT((chained - oracle).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Attention, SingleQuerySingleKeyReturnsValue) {
  Td q(1, 4), k(1, 4), v(1, 3);
  q << 1, 2, 3, 4;
  k << 4, 3, 2, 1;
  v << 0.5, -1, 2;
  EXPECT_EQ(attention<double>(q, k, v, Td::Zero(1, 1)), v);
}

TEST(Attention, MaskedKeyIsIgnored) {
  std::mt19937_64 rng(9);
  const Td q = random_tensor(3, 8, rng), k = random_tensor(4, 8, rng);
  Td v = random_tensor(4, 5, rng);
  Td mask = Td::Zero(3, 4);
  mask.col(2).setConstant(kMaskedLogit);
  AttentionCache<double> cache;
  const Td out = attention<double>(q, k, v, mask, &cache);
  EXPECT_LT(cache.probs.col(2).maxCoeff(), 1e-12);
  v.row(2).setConstant(1e6);
  EXPECT_EQ(attention<double>(q, k, v, mask), out);

  Td k3(3, 8), v3(3, 5), mask3 = Td::Zero(3, 3);
  k3 << k.row(0), k.row(1), k.row(3);
  v3 << v.row(0), v.row(1), v.row(3);
  EXPECT_LT((attention<double>(q, k3, v3, mask3) - out).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Attention, MatchesDirectWeightedSum) {
  std::mt19937_64 rng(13);
  std::bernoulli_distribution hide(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const Td q = random_tensor(3, 6, rng), k = random_tensor(4, 6, rng), v = random_tensor(4, 2, rng);
    Td mask = Td::Zero(3, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 1; j < 4; ++j)
        if (hide(rng)) mask(i, j) = kMaskedLogit;
    const Td out = attention<double>(q, k, v, mask);
    for (int i = 0; i < 3; ++i) {
      double z = 0.0;
      Rd acc = Rd::Zero(2);
      for (int j = 0; j < 4; ++j) {
        if (mask(i, j) != 0) continue;
        const double w = std::exp(q.row(i).dot(k.row(j)) / std::sqrt(6.0));
        z += w;
        acc += w * v.row(j);
      }
      ASSERT_LT((out.row(i) - acc / z).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Attention, WidthMismatchThrows) {
  EXPECT_THROW(attention<double>(Td::Zero(2, 4), Td::Zero(3, 5), Td::Zero(3, 2), Td::Zero(2, 3)),
               DimensionError);
  EXPECT_THROW(attention<double>(Td::Zero(2, 4), Td::Zero(3, 4), Td::Zero(3, 2), Td::Zero(2, 2)),
               DimensionError);
}

// Linear model with squared loss: the central difference is exact up to rounding.
DifferentiableLoss squared_loss(const Td& x, const Td& y, double grad_scale = 1.0) {
  return {[x, y](ParamStore<double>& p) {
            const Td r = linear<double>(x, p.value(0), p.value(1)) - y;
            return 0.5 * r.squaredNorm();
          },
          [x, y, grad_scale](ParamStore<double>& p) {
            const Td r = linear<double>(x, p.value(0), p.value(1)) - y;
            linear_backward<double>(x, p.value(0), r, p.grad(0), p.grad(1));
            p.grad(0) *= grad_scale;
            p.grad(1) *= grad_scale;
          }};
}

TEST(FiniteDiff, LinearSquaredLossIsExact) {
  std::mt19937_64 rng(17);
  ParamStore<double> p;
  p.add("w", 4, 3);
  p.add("b", 1, 3);
  fill_normal(p.value(0), 1.0, rng);
  fill_normal(p.value(1), 1.0, rng);
  const auto report = finite_diff_check(p, squared_loss(random_tensor(5, 4, rng), random_tensor(5, 3, rng)));
  EXPECT_TRUE(report.passed());
  EXPECT_LE(report.max_relative_error, 1e-8) << report.summary();
}

TEST(FiniteDiff, CorruptedGradientFails) {
  std::mt19937_64 rng(19);
  ParamStore<double> p;
  p.add("w", 4, 3);
  p.add("b", 1, 3);
  fill_normal(p.value(0), 1.0, rng);
  const auto report =
      finite_diff_check(p, squared_loss(random_tensor(5, 4, rng), random_tensor(5, 3, rng), 2.0));
  EXPECT_FALSE(report.passed());
  EXPECT_NEAR(report.max_relative_error, 0.5, 1e-6);
}

TEST(FiniteDiff, NonFiniteLossNamesParameter) {
  ParamStore<double> p;
  p.add("log_scale", 1, 1);
  DifferentiableLoss loss{[](ParamStore<double>& s) { return std::log(s.value(0)(0, 0)); },
                          [](ParamStore<double>&) {}};
  try {
    finite_diff_check(p, loss);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("log_scale"), std::string::npos);
  }
}

TEST(FiniteDiff, LayerNormGeluAttentionChain) {
  std::mt19937_64 rng(23);
  const Td x = random_tensor(5, 6, rng);
  Td mask = Td::Zero(5, 5);
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) mask(a, b) = kMaskedLogit;
  ParamStore<double> p;
  p.add("gain", 1, 6);
  p.add("shift", 1, 6);
  p.add("qkv", 6, 18);
  p.add("head", 6, 1);
  for (std::size_t i = 0; i < p.size(); ++i) fill_normal(p.value(i), 0.7, rng);
  const Td target = random_tensor(5, 1, rng);

  struct Fwd {
    LayerNormCache<double> ln;
    Td normed, qkv, ctx, act, out;
    AttentionCache<double> att;
  };
  auto forward = [&](const ParamStore<double>& s, Fwd& f) {
    f.normed = layer_norm<double>(x, s.value(0), s.value(1), 1e-5, &f.ln);
    f.qkv = f.normed * s.value(2);
    f.ctx = attention<double>(f.qkv.middleCols(0, 6), f.qkv.middleCols(6, 6), f.qkv.middleCols(12, 6),
                              mask, &f.att);
    f.act = gelu<double>(f.ctx);
    f.out = f.act * s.value(3);
  };
  DifferentiableLoss loss{[&](ParamStore<double>& s) {
                            Fwd f;
                            forward(s, f);
                            return 0.5 * (f.out - target).squaredNorm();
                          },
                          [&](ParamStore<double>& s) {
                            Fwd f;
                            forward(s, f);
                            const Td dout = f.out - target;
                            s.grad(3) += f.act.transpose() * dout;
                            const Td dctx = gelu_backward<double>(f.ctx, dout * s.value(3).transpose());
                            const auto g = attention_backward<double>(
                                f.qkv.middleCols(0, 6), f.qkv.middleCols(6, 6), f.qkv.middleCols(12, 6),
                                f.att, dctx);
                            Td dqkv(5, 18);
                            dqkv << g.dq, g.dk, g.dv;
                            s.grad(2) += f.normed.transpose() * dqkv;
                            layer_norm_backward<double>(f.ln, s.value(0), dqkv * s.value(2).transpose(),
                                                        s.grad(0), s.grad(1));
                          }};
  const auto report = finite_diff_check(p, loss);
  EXPECT_TRUE(report.passed()) << report.summary();
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamStore<float> p;
  p.add("w", 2, 2);
  p.value(0) << 1, 2, 3, 4;
  const Tensor<float> before = p.value(0);
  AdamOptimizer<float> opt(p, {});
  opt.step(p);
  EXPECT_EQ(p.value(0), before);
  EXPECT_EQ(p.step(), 1);
}

TEST(Adam, QuadraticConverges) {
  ParamStore<double> p;
  p.add("x", 1, 1);
  p.value(0)(0, 0) = 0.0;
  LearningRateSchedule sched;
  sched.base = 0.05;
  AdamOptimizer<double> opt(p, sched);
  const double minimizer = 0.3;
  for (int i = 0; i < 200; ++i) {
    p.grad(0)(0, 0) = 2.0 * (p.value(0)(0, 0) - minimizer);
    opt.step(p);
  }
  EXPECT_NEAR(p.value(0)(0, 0), minimizer, 1e-3);
}

TEST(Adam, NanGradientThrowsAndKeepsParameters) {
  ParamStore<float> p;
  p.add("ok", 1, 2);
  p.add("bad", 1, 2);
  p.value(0) << 1, 2;
  p.value(1) << 3, 4;
  p.grad(0) << 0.1f, 0.1f;
  p.grad(1) << 0.1f, std::numeric_limits<float>::quiet_NaN();
  const auto v0 = p.value(0), v1 = p.value(1);
  AdamOptimizer<float> opt(p, {});
  try {
    opt.step(p);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
  EXPECT_EQ(p.value(0), v0);
  EXPECT_EQ(p.value(1), v1);
}

TEST(Determinism, ForwardOpsAreBitIdentical) {
  std::mt19937_64 rng(29);
  const Td q = random_tensor(7, 8, rng), k = random_tensor(7, 8, rng), v = random_tensor(7, 8, rng);
  const Td mask = Td::Zero(7, 7);
  EXPECT_EQ(attention<double>(q, k, v, mask), attention<double>(q, k, v, mask));
  EXPECT_EQ(gelu<double>(q), gelu<double>(q));
}

}  // namespace
}  // namespace proact
