// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "proact/errors.hpp"
#include "proact/optimizer.hpp"
#include "proact/parallel.hpp"

namespace proact {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.lr must be finite and >= 0");
  if (warmup_steps < 0) throw ConfigError("train.warmup_steps must be >= 0");
  if (!(positive_fraction > 0.0 && positive_fraction <= 1.0))
    throw ConfigError("train.positive_fraction must be in (0, 1]");
  if (negative_stride == 0) throw ConfigError("train.negative_stride must be >= 1");
  if (eval_every < 0) throw ConfigError("train.eval_every must be >= 0");
  if (null_action_weight < 0.0) throw ConfigError("train.null_action_weight must be >= 0");
}

std::vector<Clip> training_clips(std::span<const Episode> train, const ModelConfig& model, const TrainConfig& cfg,
                                 std::size_t span_frames) {
  ClipOptions opt;
  opt.n = model.n;
  opt.span = span_frames;
  opt.stride = cfg.negative_stride;
  opt.jitter = cfg.jitter;
  opt.seed = cfg.seed ^ 0x6a09e667f3bcc908ULL;
  return make_clips(train, opt);
}

namespace {

struct ClipWork {
  ForwardCache<float> cache;
  GradientSet<float> grads;
  Tensor<float> d_phi;
  LossResult<float> loss;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double validation_f1(const DecisionNetwork<float>& net, const ActionCodebook& codebook,
                     const UtteranceEmbedder& embedder, std::span<const Episode> episodes,
                     std::span<const Clip> clips, std::size_t threads) {
  // Non-owning embedder handle; the policy does not outlive this call.
  const Policy policy(net, codebook, std::shared_ptr<const UtteranceEmbedder>(&embedder, [](auto*) {}), {});
  const auto scored = score_clips(policy, episodes, clips, threads);
  std::vector<ScoredLabel> labels;
  labels.reserve(scored.size());
  for (const auto& s : scored) labels.push_back({s.trigger, s.positive});
  try {
    return sweep(labels).best.f1;
  } catch (const MetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

TrainResult train(std::span<const Episode> train_episodes, std::span<const Clip> clips,
                  std::span<const Episode> val_episodes, std::span<const Clip> val_clips,
                  const ActionCodebook& codebook, const UtteranceEmbedder& embedder, const ModelConfig& model,
                  const TrainConfig& cfg, const StepCallback& on_step) {
  if (model.num_actions != codebook.size())
    throw ConfigError("model.num_actions (" + std::to_string(model.num_actions) + ") != codebook size (" +
                      std::to_string(codebook.size()) + ")");
  DecisionNetwork<float> net(model);
  net.init(cfg.seed);
  return train_network(std::move(net), train_episodes, clips, val_episodes, val_clips, codebook, embedder, cfg,
                       on_step);
}

TrainResult train_network(DecisionNetwork<float> network, std::span<const Episode> train_episodes,
                          std::span<const Clip> clips, std::span<const Episode> val_episodes,
                          std::span<const Clip> val_clips, const ActionCodebook& codebook,
                          const UtteranceEmbedder& embedder, const TrainConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  const ModelConfig& model = network.config();
  if (model.num_actions != codebook.size()) throw ConfigError("model.num_actions does not match the codebook");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < clips.size(); ++i) (clips[i].positive ? pos : neg).push_back(i);
  if (pos.empty()) throw LabelError("training set has no positive clips");

  TrainResult result{std::move(network), {}, false, {}, pos.size(), neg.size()};
  DecisionNetwork<float>& net = result.network;
  ParamStore<float>& params = net.params();
  AdamOptimizer<float> opt(params, {cfg.learning_rate, cfg.warmup_steps});
  const LossOptions loss_opt{cfg.final_frame_only, cfg.null_action_weight};

  // Validation subset: a fixed, seed-determined sample of the validation clips.
  std::vector<Clip> val_subset(val_clips.begin(), val_clips.end());
  if (val_subset.size() > cfg.val_clip_limit) {
    std::mt19937_64 vrng(cfg.seed ^ 0xbb67ae8584caa73bULL);
    std::shuffle(val_subset.begin(), val_subset.end(), vrng);
    val_subset.resize(cfg.val_clip_limit);
    std::sort(val_subset.begin(), val_subset.end(), [](const Clip& a, const Clip& b) {
      return std::tie(a.episode, a.end, a.positive) < std::tie(b.episode, b.end, b.positive);
    });
  }

  std::size_t n_pos = static_cast<std::size_t>(std::llround(cfg.positive_fraction * static_cast<double>(cfg.batch_size)));
  n_pos = std::clamp<std::size_t>(n_pos, 1, cfg.batch_size);
  if (neg.empty()) n_pos = cfg.batch_size;
  const std::size_t n_neg = cfg.batch_size - n_pos;

  std::mt19937_64 rng(cfg.seed ^ 0x3c6ef372fe94f82bULL);
  std::vector<ClipWork> work(cfg.batch_size);
  for (auto& w : work) w.grads = params.make_gradient_set();
  GradientSet<float> total = params.make_gradient_set();
  const float inv_b = 1.0f / static_cast<float>(cfg.batch_size);

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    std::vector<std::size_t> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t i = 0; i < n_pos; ++i) batch.push_back(pos[rng() % pos.size()]);
    for (std::size_t i = 0; i < n_neg; ++i) batch.push_back(neg[rng() % neg.size()]);
    std::sort(batch.begin(), batch.end());

    ActionEncodingCache<float> enc_cache;
    const Tensor<float> phi = net.encode_actions(codebook, embedder, &enc_cache);
    parallel_for(batch.size(), cfg.threads, [&](std::size_t b) {
      ClipWork& w = work[b];
      const Clip& c = clips[batch[b]];
      const Episode& ep = train_episodes[c.episode];
      const ClipWindow window = clip_window(ep, c, model.m, model.n);
      const ClipLabels labels = label_clip(ep, c, window, codebook);
      const auto out = net.model().forward(window, params, phi, &w.cache);
      w.loss = compute_loss(out, labels, loss_opt);
      w.grads.zero();
      w.d_phi = Tensor<float>::Zero(phi.rows(), phi.cols());
      net.model().backward(w.cache, w.loss.grad, params, phi, w.grads, w.d_phi);
      w.cache = {};
    });

    StepRecord rec;
    rec.step = step + 1;
    total.zero();
    Tensor<float> d_phi = Tensor<float>::Zero(phi.rows(), phi.cols());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const ClipWork& w = work[b];
      rec.total += w.loss.total;
      rec.trigger += w.loss.trigger;
      rec.action += w.loss.action;
      rec.target += w.loss.target;
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += w.grads[i];
      d_phi += w.d_phi;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    rec.total *= inv;
    rec.trigger *= inv;
    rec.action *= inv;
    rec.target *= inv;
    for (std::size_t i = 0; i < total.size(); ++i) total[i] *= inv_b;
    d_phi *= inv_b;
    net.action_encoder().backward(enc_cache, d_phi, params, total);

    if (!std::isfinite(rec.total)) {
      result.diverged = true;
      result.divergence = "non-finite loss at step " + std::to_string(rec.step);
      break;
    }
    for (std::size_t i = 0; i < params.size(); ++i) params.grad(i) = total[i];
    try {
      opt.step(params);
    } catch (const TrainingError& e) {
      params.zero_grad();
      result.diverged = true;
      result.divergence = std::string(e.what()) + " at step " + std::to_string(rec.step);
      break;
    }
    if (cfg.eval_every > 0 && !val_subset.empty() && (rec.step % cfg.eval_every == 0 || rec.step == cfg.steps))
      rec.val_f1 = validation_f1(net, codebook, embedder, val_episodes, val_subset, cfg.threads);
    result.curve.push_back(rec);
    if (on_step) on_step(rec);
  }
  return result;
}

std::string loss_curve_to_csv(const std::vector<StepRecord>& curve) {
  std::ostringstream out;
  out << "step,total_loss,trigger_loss,action_loss,target_loss,val_f1\n";
  for (const auto& r : curve)
    out << r.step << ',' << fmt(r.total) << ',' << fmt(r.trigger) << ',' << fmt(r.action) << ',' << fmt(r.target)
        << ',' << fmt(r.val_f1) << '\n';
  return out.str();
}

namespace {

double calibrate_one(std::span<const ScoredLabel> scored, const char* what) {
  bool has_pos = false, has_neg = false;
  for (const auto& s : scored) (s.positive ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw CalibrationError(std::string("cannot calibrate ") + what + ": validation set has a single polarity");
  const double first = scored.front().score;
  if (std::all_of(scored.begin(), scored.end(), [&](const ScoredLabel& s) { return s.score == first; }))
    throw CalibrationError(std::string("cannot calibrate ") + what + ": constant scores");
  return sweep(scored).best.threshold;
}

}  // namespace

Thresholds calibrate_thresholds(std::span<const ScoredClip> validation) {
  std::vector<ScoredLabel> clips, tokens;
  for (const auto& c : validation) {
    clips.push_back({c.trigger, c.positive});
    if (c.positive) tokens.insert(tokens.end(), c.targets.begin(), c.targets.end());
  }
  if (clips.empty()) throw CalibrationError("cannot calibrate: empty validation set");
  Thresholds t;
  t.trigger = calibrate_one(clips, "H_trigger");
  if (tokens.empty()) throw CalibrationError("cannot calibrate H_target: no person tokens on positive clips");
  t.target = std::nextafter(calibrate_one(tokens, "H_target"), 0.0);
  t.calibrated = true;
  return t;
}

}  // namespace proact
