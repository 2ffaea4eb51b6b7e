// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <sstream>

#include "proact/errors.hpp"
#include "proact/parallel.hpp"

namespace proact {

std::vector<ScoredClip> score_clips(const Policy& policy, std::span<const Episode> episodes,
                                    std::span<const Clip> clips, std::size_t threads) {
  const auto& cfg = policy.config();
  const std::size_t null = policy.codebook().null_index();
  std::vector<ScoredClip> out(clips.size());
  parallel_for(clips.size(), threads, [&](std::size_t i) {
    const Clip& c = clips[i];
    const Episode& ep = episodes[c.episode];
    const ClipWindow w = clip_window(ep, c, cfg.m, cfg.n);
    const auto pred = policy.predict(w);
    ScoredClip& s = out[i];
    s.id = clip_id(ep, c);
    s.source = ep.source;
    s.positive = c.positive;
    s.warm_up = w.warm_up;
    s.trigger = pred.trigger;
    s.null_probability = pred.action_dist[static_cast<Eigen::Index>(null)];
    std::vector<double> p(null + 1);
    for (std::size_t k = 0; k <= null; ++k) p[k] = pred.action_dist[static_cast<Eigen::Index>(k)];
    s.action_argmax = argmax_action(p, false);
    s.action_non_null = null > 0 ? argmax_action(p, true) : null;
    if (c.positive) {
      const ClipLabels labels = label_clip(ep, c, w, policy.codebook());
      s.true_action = static_cast<int>(labels.action.back());
      const std::size_t base = (w.n - 1) * w.m;
      for (std::size_t slot = 0; slot < w.m; ++slot)
        if (labels.target_eligible[base + slot])
          s.targets.push_back({pred.target[static_cast<Eigen::Index>(slot)], labels.target[base + slot] != 0});
    }
  });
  return out;
}

double mode_score(const ScoredClip& c, InferenceMode mode, std::size_t null_index) {
  switch (mode) {
    case InferenceMode::kTriggerOnly: return c.trigger;
    case InferenceMode::kActorOnly: return 1.0 - c.null_probability;
    case InferenceMode::kTriggerActor: return c.action_argmax == null_index ? 0.0 : c.trigger;
  }
  return 0.0;
}

bool mode_fires(const ScoredClip& c, InferenceMode mode, std::size_t null_index, double h) {
  switch (mode) {
    case InferenceMode::kTriggerOnly: return c.trigger >= h;
    case InferenceMode::kActorOnly: return c.action_argmax != null_index;
    case InferenceMode::kTriggerActor: return c.trigger >= h && c.action_argmax != null_index;
  }
  return false;
}

namespace {

GroupReport group_report(const std::string& name, const std::vector<const ScoredClip*>& clips,
                         const Thresholds& th, InferenceMode mode, std::size_t null) {
  GroupReport g;
  g.source = name;
  g.clips = clips.size();
  Counts counts;
  std::vector<ScoredLabel> scored;
  std::vector<ScoredLabel> tokens;
  std::size_t correct = 0;
  scored.reserve(clips.size());
  for (const ScoredClip* c : clips) {
    const bool fired = mode_fires(*c, mode, null, th.trigger);
    if (c->positive) {
      ++g.positives;
      fired ? ++counts.tp : ++counts.fn;
      if (fired) {
        ++g.action_support;
        if (static_cast<int>(c->action_non_null) == c->true_action) ++correct;
      }
      tokens.insert(tokens.end(), c->targets.begin(), c->targets.end());
    } else {
      fired ? ++counts.fp : ++counts.tn;
    }
    scored.push_back({mode_score(*c, mode, null), c->positive});
  }
  g.operating = point_from_counts(counts, th.trigger);
  g.sweep_defined = g.positives > 0 && g.positives < g.clips;
  if (g.sweep_defined) {
    const auto sw = sweep(scored);
    g.ap = sw.ap;
    g.ar = sw.ar;
    g.best = sw.best;
  }
  g.action_top1 = g.action_support ? static_cast<double>(correct) / static_cast<double>(g.action_support) : 0.0;
  g.target_tokens = tokens.size();
  if (!tokens.empty()) {
    g.target = pr_at_threshold(tokens, std::nextafter(th.target, 1.0));  // targets need score > H
    g.target.threshold = th.target;
    const auto& t = g.target.counts;
    g.target_accuracy = static_cast<double>(t.tp + t.tn) / static_cast<double>(tokens.size());
  }
  return g;
}

}  // namespace

MetricsReport build_report(std::span<const ScoredClip> scored, const Thresholds& th, InferenceMode mode,
                           std::size_t null) {
  if (scored.empty()) throw MetricError("no clips to evaluate");
  MetricsReport r;
  r.mode = mode;
  r.thresholds = th;
  std::vector<const ScoredClip*> all;
  std::map<std::string, std::vector<const ScoredClip*>> by_source;
  for (const auto& c : scored) {
    all.push_back(&c);
    by_source[c.source].push_back(&c);
  }
  r.groups.push_back(group_report("all", all, th, mode, null));
  for (const auto& [name, clips] : by_source) r.groups.push_back(group_report(name, clips, th, mode, null));
  if (r.groups.front().sweep_defined) {
    std::vector<ScoredLabel> pooled;
    for (const auto& c : scored) pooled.push_back({mode_score(c, mode, null), c.positive});
    r.curve = sweep(pooled).curve;
  }
  return r;
}

MetricsReport evaluate_checkpoint(const Policy& policy, std::span<const Episode> episodes, InferenceMode mode,
                                  std::size_t span_frames, std::size_t threads) {
  if (episodes.empty()) throw InputError("no test episodes to evaluate");
  ClipOptions opt;
  opt.n = policy.config().n;
  opt.span = span_frames;
  opt.stride = 1;
  const auto clips = make_clips(episodes, opt);
  const auto scored = score_clips(policy, episodes, clips, threads);
  return build_report(scored, policy.thresholds(), mode, policy.codebook().null_index());
}

namespace {

nlohmann::ordered_json point_json(const PRPoint& p) {
  return {{"threshold", p.threshold},
          {"precision", p.precision},
          {"recall", p.recall},
          {"f1", p.f1},
          {"tp", p.counts.tp},
          {"fp", p.counts.fp},
          {"fn", p.counts.fn},
          {"tn", p.counts.tn},
          {"precision_undefined", p.precision_undefined},
          {"recall_undefined", p.recall_undefined}};
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(r.mode));
  j["thresholds"] = {{"trigger", r.thresholds.trigger},
                     {"target", r.thresholds.target},
                     {"calibrated", r.thresholds.calibrated}};
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    nlohmann::ordered_json o;
    o["source"] = g.source;
    o["clips"] = g.clips;
    o["positives"] = g.positives;
    o["operating"] = point_json(g.operating);
    o["sweep_defined"] = g.sweep_defined;
    o["ap"] = g.ap;
    o["ar"] = g.ar;
    o["best"] = point_json(g.best);
    o["action_top1"] = g.action_top1;
    o["action_support"] = g.action_support;
    o["target"] = point_json(g.target);
    o["target_accuracy"] = g.target_accuracy;
    o["target_tokens"] = g.target_tokens;
    j["groups"].push_back(o);
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "mode,source,clips,positives,threshold,precision,recall,f1,tp,fp,fn,tn,ap,ar,best_threshold,best_f1,"
         "action_top1,action_support,target_threshold,target_precision,target_recall,target_f1,target_accuracy,"
         "target_tokens,flags\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& g : r.groups) {
    std::string flags;
    auto flag = [&](bool on, const char* name) {
      if (!on) return;
      if (!flags.empty()) flags += ';';
      flags += name;
    };
    flag(g.operating.precision_undefined, "precision_0/0");
    flag(g.operating.recall_undefined, "recall_0/0");
    flag(!g.sweep_defined, "single_polarity");
    const auto& o = g.operating;
    out << to_string(r.mode) << ',' << g.source << ',' << g.clips << ',' << g.positives << ','
        << num(r.thresholds.trigger) << ',' << num(o.precision) << ',' << num(o.recall) << ',' << num(o.f1) << ','
        << o.counts.tp << ',' << o.counts.fp << ',' << o.counts.fn << ',' << o.counts.tn << ',' << num(g.ap) << ','
        << num(g.ar) << ',' << num(g.best.threshold) << ',' << num(g.best.f1) << ',' << num(g.action_top1) << ','
        << g.action_support << ',' << num(r.thresholds.target) << ',' << num(g.target.precision) << ','
        << num(g.target.recall) << ',' << num(g.target.f1) << ',' << num(g.target_accuracy) << ','
        << g.target_tokens << ',' << flags << '\n';
  }
  return out.str();
}

std::string pr_curve_to_csv(const std::vector<PRPoint>& curve) {
  std::ostringstream out;
  out << "threshold,precision,recall\n";
  char buf[96];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.threshold, p.precision, p.recall);
    out << buf;
  }
  return out.str();
}

}  // namespace proact
