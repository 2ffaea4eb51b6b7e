// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale throughput: M=20, N=10, D=128, 6 blocks, K=8.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "proact/checkpoint.hpp"
#include "proact/clips.hpp"
#include "proact/inference_engine.hpp"
#include "proact/metrics.hpp"
#include "proact/scenario_sim.hpp"

namespace {

using namespace proact;

struct DeskFixture {
  SimConfig sim;
  ModelConfig model;
  ActionCodebook codebook;
  std::shared_ptr<const Policy> policy;
  std::vector<Episode> episodes;

  DeskFixture() : codebook(ActionCodebook::build(action_catalog())) {
    model.feature_dim = sim.feature_dim;
    model.n = static_cast<std::size_t>(sim.window_frames());
    model.num_actions = codebook.size();
    DecisionNetwork<float> net(model);
    net.init(7);
    Thresholds th;
    th.calibrated = true;
    policy = std::make_shared<const Policy>(
        std::move(net), codebook,
        std::shared_ptr<const UtteranceEmbedder>(make_embedder("hashed-bag-fnv1a64", model.utterance_dim)), th);
    for (std::uint64_t i = 0; i < 4; ++i)
      episodes.push_back(generate_episode(sim, episode_seed(11, i), "bench-" + std::to_string(i)).episode);
  }
};

const DeskFixture& desk() {
  static const DeskFixture f;
  return f;
}

void BM_DeskPredict(benchmark::State& state) {
  const auto& f = desk();
  const Episode& ep = f.episodes.front();
  const Clip clip{0, ep.frames.size() - 1, false, -1, 0};
  const ClipWindow w = clip_window(ep, clip, f.model.m, f.model.n);
  for (auto _ : state) benchmark::DoNotOptimize(f.policy->predict(w));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DeskPredict)->Unit(benchmark::kMillisecond);

// One decision per frame, including ring-buffer assembly and command gating.
void BM_DeskEngineStep(benchmark::State& state) {
  const auto& f = desk();
  EngineConfig cfg;
  cfg.mode = static_cast<InferenceMode>(state.range(0));
  InferenceEngine engine(f.policy, cfg);
  std::size_t e = 0, i = 0;
  for (auto _ : state) {
    const auto& ep = f.episodes[e];
    benchmark::DoNotOptimize(engine.step(ep.frames[i]));
    if (++i == ep.frames.size()) {
      i = 0;
      e = (e + 1) % f.episodes.size();
      engine.reset();
    }
  }
  state.SetItemsProcessed(state.iterations());
  state.counters["decisions_per_s"] = benchmark::Counter(static_cast<double>(state.iterations()),
                                                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_DeskEngineStep)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

// Forward, loss and backward for one positive clip (the per-clip training cost).
void BM_DeskForwardBackward(benchmark::State& state) {
  const auto& f = desk();
  std::vector<Episode> eps(f.episodes.begin(), f.episodes.end());
  ClipOptions opt;
  opt.n = f.model.n;
  opt.span = static_cast<std::size_t>(f.sim.span_frames());
  const auto clips = make_clips(eps, opt);
  const Clip* pos = &clips.front();
  for (const auto& c : clips)
    if (c.positive) {
      pos = &c;
      break;
    }
  const Episode& ep = eps[pos->episode];
  const ClipWindow w = clip_window(ep, *pos, f.model.m, f.model.n);
  const ClipLabels labels = label_clip(ep, *pos, w, f.codebook);
  const auto& net = f.policy->network();
  const auto& phi = f.policy->action_encodings();
  auto grads = net.params().make_gradient_set();
  Tensor<float> d_phi = Tensor<float>::Zero(phi.rows(), phi.cols());
  ForwardCache<float> cache;
  for (auto _ : state) {
    const auto out = net.model().forward(w, net.params(), phi, &cache);
    const auto loss = compute_loss(out, labels, {false, 1.0});
    net.model().backward(cache, loss.grad, net.params(), phi, grads, d_phi);
    benchmark::DoNotOptimize(loss.total);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DeskForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredLabel> scored(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scored) {
    s.positive = u(rng) < 0.05;
    s.score = s.positive ? 0.3 + 0.7 * u(rng) : 0.7 * u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(sweep(scored));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sweep)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
