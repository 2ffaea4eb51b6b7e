// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "proact/tensor.hpp"

namespace proact {

/// A scalar loss over a double-precision parameter store. `value` evaluates
/// the loss only; `gradient` fills the store's gradient slots (overwriting).
struct DifferentiableLoss {
  std::function<double(ParamStore<double>&)> value;
  std::function<void(ParamStore<double>&)> gradient;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  double denominator_floor = 1e-8;
};

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed() const;
  std::string summary() const;
};

/// Central-difference check of every parameter entry. Parameters are
/// restored exactly after each probe.
GradCheckReport finite_diff_check(ParamStore<double>& params, const DifferentiableLoss& loss,
                                  const GradCheckOptions& options = {});

}  // namespace proact
