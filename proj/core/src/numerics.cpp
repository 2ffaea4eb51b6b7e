// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "proact/errors.hpp"
#include "proact/gradcheck.hpp"
#include "proact/tensor.hpp"

namespace proact {

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.passed ? "ok   " : "FAIL ") << e.name << " max_rel=" << e.max_relative_error
       << " at[" << e.worst_index << "] analytic=" << e.analytic_at_worst
       << " numeric=" << e.numeric_at_worst << '\n';
  }
  return os.str();
}

GradCheckReport finite_diff_check(ParamStore<double>& params, const DifferentiableLoss& loss,
                                  const GradCheckOptions& options) {
  params.zero_grad();
  loss.gradient(params);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params.grad(i));

  GradCheckReport report;
  const double h = options.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.at(i);
    GradCheckEntry entry{p.name};
    for (Eigen::Index j = 0; j < p.value.size(); ++j) {
      double& x = p.value.data()[j];
      const double saved = x;
      x = saved + h;
      const double up = loss.value(params);
      x = saved - h;
      const double down = loss.value(params);
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("finite_diff_check: non-finite loss while probing '" + p.name + "'");
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i].data()[j];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      if (j == 0 || rel > entry.max_relative_error) {
        entry.max_relative_error = rel;
        entry.worst_index = static_cast<std::size_t>(j);
        entry.analytic_at_worst = a;
        entry.numeric_at_worst = numeric;
      }
    }
    entry.passed = entry.max_relative_error <= options.tolerance;
    report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace proact
