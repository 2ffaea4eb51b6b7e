// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/metrics.hpp"

#include <algorithm>

#include "proact/errors.hpp"

namespace proact {

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PRPoint point_from_counts(const Counts& c, double threshold) {
  PRPoint p;
  p.threshold = threshold;
  p.counts = c;
  p.precision_undefined = c.tp + c.fp == 0;
  p.recall_undefined = c.tp + c.fn == 0;
  p.precision = p.precision_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  p.recall = p.recall_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  p.f1 = f1_score(p.precision, p.recall);
  return p;
}

PRPoint pr_at_threshold(std::span<const ScoredLabel> scored, double threshold) {
  Counts c;
  for (const auto& s : scored) {
    const bool fired = s.score >= threshold;
    if (s.positive)
      (fired ? c.tp : c.fn)++;
    else
      (fired ? c.fp : c.tn)++;
  }
  return point_from_counts(c, threshold);
}

SweepResult sweep(std::span<const ScoredLabel> scored) {
  std::size_t pos = 0;
  for (const auto& s : scored) pos += s.positive;
  const std::size_t neg = scored.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("sweep needs both positive and negative clips");

  std::vector<ScoredLabel> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
    return a.score > b.score || (a.score == b.score && a.positive > b.positive);
  });

  // Walk thresholds from high to low; all clips with score >= H fire.
  std::vector<PRPoint> descending;
  Counts c{0, 0, pos, neg};
  for (std::size_t i = 0; i < sorted.size();) {
    const double h = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == h; ++i) {
      if (sorted[i].positive) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
        --c.tn;
      }
    }
    descending.push_back(point_from_counts(c, h));
  }

  SweepResult r;
  // Precision envelope: best precision at any recall >= this point's.
  std::vector<double> envelope(descending.size());
  double running = 0.0;
  for (std::size_t k = descending.size(); k-- > 0;) {
    running = std::max(running, descending[k].precision);
    envelope[k] = running;
  }
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < descending.size(); ++k) {
    r.ap += (descending[k].recall - prev_recall) * envelope[k];
    prev_recall = descending[k].recall;
  }

  r.curve.assign(descending.rbegin(), descending.rend());
  double recall_sum = 0.0;
  for (const auto& p : r.curve) recall_sum += p.recall;
  r.ar = recall_sum / static_cast<double>(r.curve.size());

  r.best = r.curve.front();
  for (const auto& p : r.curve)
    if (p.f1 >= r.best.f1) r.best = p;
  return r;
}

}  // namespace proact
