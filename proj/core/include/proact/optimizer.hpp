// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "proact/errors.hpp"
#include "proact/tensor.hpp"

namespace proact {

/// Learning-rate schedule: linear warm-up then constant.
struct LearningRateSchedule {
  double base = 1e-3;
  std::int64_t warmup_steps = 0;

  double at(std::int64_t step) const {
    if (warmup_steps > 0 && step < warmup_steps)
      return base * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    return base;
  }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer. Moments are kept in double regardless of the
/// parameter precision.
template <class T>
class AdamOptimizer {
 public:
  AdamOptimizer(const ParamStore<T>& params, LearningRateSchedule schedule, AdamConfig cfg = {})
      : schedule_(schedule), cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Tensor<double>::Zero(params.value(i).rows(), params.value(i).cols()));
      v_.push_back(Tensor<double>::Zero(params.value(i).rows(), params.value(i).cols()));
    }
  }

  /// Applies one update from the gradients held in the store, then zeroes
  /// them. A non-finite gradient aborts before any parameter is touched.
  void step(ParamStore<T>& params) {
    if (params.size() != m_.size()) throw DimensionError("optimizer: parameter layout changed");
    for (std::size_t i = 0; i < params.size(); ++i)
      if (!params.grad(i).allFinite())
        throw TrainingError("non-finite gradient in parameter '" + params.at(i).name + "'");

    const std::int64_t t = params.step() + 1;
    const double lr = schedule_.at(params.step());
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params.at(i);
      auto& m = m_[i];
      auto& v = v_[i];
      const auto g = p.grad.template cast<double>();
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      const Tensor<double> update =
          ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps)).matrix() * lr;
      p.value -= update.template cast<T>();
      p.grad.setZero();
    }
    params.set_step(t);
  }

  const LearningRateSchedule& schedule() const { return schedule_; }

 private:
  LearningRateSchedule schedule_;
  AdamConfig cfg_;
  std::vector<Tensor<double>> m_;
  std::vector<Tensor<double>> v_;
};

}  // namespace proact
