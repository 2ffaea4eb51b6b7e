// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

// proact: sim-gen, train, eval, infer and inspect over the on-disk formats.
// Exit codes: 0 success, 1 usage/config, 2 data/format, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "proact/checkpoint.hpp"
#include "proact/errors.hpp"
#include "proact/evaluation.hpp"
#include "proact/inference_engine.hpp"
#include "proact/run_config.hpp"
#include "proact/scenario_sim.hpp"
#include "proact/trainer.hpp"

namespace fs = std::filesystem;
using namespace proact;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool print_config = false;
  bool quiet = false;
};

void log(const GlobalOptions& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

/// Dataset facts recorded by sim-gen in the manifest.
SimConfig manifest_sim_config(const Manifest& m) {
  ConfigResolver r;
  r.apply_text(m.sim_config, "manifest");
  return r.config().sim;
}

std::vector<MultiModalAction> codebook_source(const Manifest& m, const std::vector<Episode>& train) {
  std::vector<MultiModalAction> actions = m.action_catalog;
  for (const auto& ep : train)
    for (const auto& a : ep.annotations) actions.push_back(a.action);
  return actions;
}

// --- sim-gen -------------------------------------------------------------------

int run_sim_gen(const GlobalOptions& g, const RunConfig& cfg, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const Manifest m = generate_dataset(cfg.sim, cfg.episodes, cfg.split, out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("wrote %zu episodes to %s (train %zu / val %zu / test %zu; positives %zu / %zu / %zu) in %.1fs\n",
              cfg.episodes, (fs::path(out_dir) / "manifest.json").c_str(), m.split("train").size(),
              m.split("val").size(), m.split("test").size(), m.positives("train"), m.positives("val"),
              m.positives("test"), secs);
  (void)g;
  return kExitOk;
}

// --- train ---------------------------------------------------------------------

int run_train(const GlobalOptions& g, RunConfig cfg, const std::string& manifest_path, const std::string& out,
              std::string metrics_path) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const Manifest manifest = read_manifest(manifest_path);
  const SimConfig sim = manifest_sim_config(manifest);
  if (static_cast<int>(cfg.model.n) != sim.window_frames())
    throw ConfigError("model.n = " + std::to_string(cfg.model.n) + " but the dataset's clip window is " +
                      std::to_string(sim.window_frames()) + " frames");
  cfg.model.feature_dim = sim.feature_dim;
  const auto span = static_cast<std::size_t>(sim.span_frames());

  const auto train_eps = load_split(manifest, "train");
  const auto val_eps = load_split(manifest, "val");
  if (train_eps.empty()) throw InputError("manifest has an empty train split");
  const auto codebook = ActionCodebook::build(codebook_source(manifest, train_eps));
  cfg.model.num_actions = codebook.size();
  auto embedder = std::shared_ptr<const UtteranceEmbedder>(make_embedder("hashed-bag-fnv1a64", cfg.model.utterance_dim));

  const auto clips = training_clips(train_eps, cfg.model, cfg.train, span);
  ClipOptions val_opt;
  val_opt.n = cfg.model.n;
  val_opt.span = span;
  val_opt.stride = 1;
  const auto val_clips = make_clips(val_eps, val_opt);
  log(g, "train: " + std::to_string(train_eps.size()) + " episodes, K=" + std::to_string(codebook.size()) +
             ", clips " + std::to_string(clips.size()) + ", validation clips " + std::to_string(val_clips.size()));

  const auto report_every = std::max<std::int64_t>(1, cfg.train.steps / 20);
  auto result = train(train_eps, clips, val_eps, val_clips, codebook, *embedder, cfg.model, cfg.train,
                      [&](const StepRecord& r) {
                        if (r.step % report_every != 0 && r.step != cfg.train.steps && std::isnan(r.val_f1)) return;
                        char buf[160];
                        std::snprintf(buf, sizeof buf,
                                      "step %6lld  loss %.4f (trig %.4f act %.4f tgt %.4f)  val_f1 %s  %.0fs",
                                      static_cast<long long>(r.step), r.total, r.trigger, r.action, r.target,
                                      std::isnan(r.val_f1) ? "-" : std::to_string(r.val_f1).c_str(), elapsed());
                        log(g, buf);
                      });

  std::map<std::string, std::string> meta = {
      {"data.span_frames", std::to_string(span)},
      {"data.master_seed", std::to_string(manifest.master_seed)},
      {"data.train_episodes", std::to_string(train_eps.size())},
      {"train.positives", std::to_string(result.positives)},
      {"train.negatives", std::to_string(result.negatives)},
      {"train.steps_completed", std::to_string(result.curve.size())},
      {"train.seed", std::to_string(cfg.train.seed)},
      {"train.batch_size", std::to_string(cfg.train.batch_size)},
      {"train.lr", std::to_string(cfg.train.learning_rate)},
      {"train.diverged", result.diverged ? "true" : "false"},
  };
  if (!result.curve.empty()) meta["train.final_loss"] = std::to_string(result.curve.back().total);

  if (metrics_path.empty()) metrics_path = out + ".metrics.csv";
  atomic_write(metrics_path, loss_curve_to_csv(result.curve));

  Policy policy(std::move(result.network), codebook, embedder, {});
  if (result.diverged) {
    meta["train.divergence"] = result.divergence;
    save_checkpoint(policy.to_checkpoint(meta), out);
    std::cerr << "error: training diverged (" << result.divergence << "); last good parameters saved to " << out
              << " uncalibrated\n";
    return kExitNumeric;
  }
  if (val_clips.empty()) throw InputError("validation split has no clips; cannot calibrate thresholds");
  const auto scored = score_clips(policy, val_eps, val_clips, cfg.eval_threads);
  const Thresholds th = calibrate_thresholds(scored);
  policy.set_thresholds(th);
  save_checkpoint(policy.to_checkpoint(meta), out);
  std::printf("checkpoint %s (H_trigger %.6f, H_target %.6f), metrics %s, %.1fs\n", out.c_str(), th.trigger,
              th.target, metrics_path.c_str(), elapsed());
  return kExitOk;
}

// --- eval ----------------------------------------------------------------------

int run_eval(const GlobalOptions& g, const RunConfig& cfg, const std::string& ckpt_path,
             const std::string& manifest_path, const std::string& split, const std::string& out_dir) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const Policy policy(ckpt);
  const Manifest manifest = read_manifest(manifest_path);
  const SimConfig sim = manifest_sim_config(manifest);
  if (static_cast<int>(policy.config().n) != sim.window_frames() || policy.config().feature_dim != sim.feature_dim)
    throw ConfigError("checkpoint model (n, feature_dim) does not match the dataset");
  const auto episodes = load_split(manifest, split);
  log(g, "eval: " + std::to_string(episodes.size()) + " " + split + " episodes, mode " +
             std::string(to_string(cfg.eval_mode)));
  const auto report =
      evaluate_checkpoint(policy, episodes, cfg.eval_mode, static_cast<std::size_t>(sim.span_frames()), cfg.eval_threads);
  fs::create_directories(out_dir);
  const auto json_path = fs::path(out_dir) / "report.json";
  const auto csv_path = fs::path(out_dir) / "report.csv";
  const auto curve_path = fs::path(out_dir) / "pr_curve.csv";
  atomic_write(json_path, report_to_json(report));
  atomic_write(csv_path, report_to_csv(report));
  atomic_write(curve_path, pr_curve_to_csv(report.curve));
  for (const auto& grp : report.groups)
    std::printf("%-8s clips %6zu pos %5zu  P %.4f R %.4f F1 %.4f  AP %.4f AR %.4f  action@TP %.4f  target F1 %.4f\n",
                grp.source.c_str(), grp.clips, grp.positives, grp.operating.precision, grp.operating.recall,
                grp.operating.f1, grp.ap, grp.ar, grp.action_top1, grp.target.f1);
  std::printf("%s\n%s\n%s\n", json_path.c_str(), csv_path.c_str(), curve_path.c_str());
  return kExitOk;
}

// --- infer ---------------------------------------------------------------------

int run_infer(const GlobalOptions& g, const RunConfig& cfg, const std::string& ckpt_path, const std::string& input) {
  auto policy = std::make_shared<const Policy>(load_checkpoint(ckpt_path));
  InferenceEngine engine(policy, cfg.infer);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw InputError("cannot open input '" + input + "'");
    in = &file;
  }
  std::string line, episode;
  std::size_t line_no = 0, frames = 0, commands = 0, skipped = 0;
  double busy = 0.0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FramePacket packet;
    try {
      packet = parse_frame_line(line).frame;
    } catch (const DataError& e) {
      if (cfg.infer_strict) throw InputError("line " + std::to_string(line_no) + ": " + e.what());
      std::cerr << "warning: skipping line " << line_no << ": " << e.what() << '\n';
      ++skipped;
      continue;
    }
    if (frames > 0 && packet.episode_id != episode) engine.reset();
    episode = packet.episode_id;
    const auto t = std::chrono::steady_clock::now();
    StepResult r;
    try {
      r = engine.step(packet);
    } catch (const StreamError& e) {
      if (cfg.infer_strict) throw;
      std::cerr << "warning: skipping line " << line_no << ": " << e.what() << '\n';
      ++skipped;
      continue;
    }
    busy += std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    ++frames;
    if (r.event == StepEvent::kNoTarget)
      log(g, "event: trigger-without-target at " + packet.episode_id + "@" + std::to_string(packet.frame_idx));
    if (r.command) {
      ++commands;
      std::cout << command_to_json(*r.command) << '\n' << std::flush;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "infer: %zu frames, %zu commands, %zu skipped lines, %.2f decisions/s", frames,
                commands, skipped, busy > 0.0 ? static_cast<double>(frames) / busy : 0.0);
  log(g, buf);
  return kExitOk;
}

// --- inspect -------------------------------------------------------------------

int run_inspect(const std::string& ckpt_path) {
  const auto c = load_checkpoint(ckpt_path);
  std::printf("format version: %u\n", c.version);
  std::printf("model: %s\n", model_config_to_json(c.config).c_str());
  std::printf("embedder: %s (dim %zu)\n", c.embedder_id.c_str(), c.embedder_dim);
  std::printf("codebook K = %zu (+ NULL)\n", c.codebook.size());
  for (std::size_t k = 0; k < c.codebook.size(); ++k) {
    const auto& a = c.codebook.at(k);
    std::printf("  [%zu] \"%s\" expression %d motion %d\n", k, a.utterance.c_str(), a.expression_id, a.motion_id);
  }
  std::printf("thresholds: H_trigger %.9g  H_target %.9g  (%s)\n", c.thresholds.trigger, c.thresholds.target,
              c.thresholds.calibrated ? "calibrated" : "uncalibrated");
  std::printf("optimizer step: %lld\n", static_cast<long long>(c.params.step()));
  std::printf("tensors: %zu, parameters: %zu\n", c.params.size(), c.params.total_count());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const auto& p = c.params.at(i);
    std::printf("  %-34s %5lld x %-5lld\n", p.name.c_str(), static_cast<long long>(p.value.rows()),
                static_cast<long long>(p.value.cols()));
  }
  std::printf("training metadata:\n");
  for (const auto& [k, v] : c.training) std::printf("  %s = %s\n", k.c_str(), v.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive interaction decision stack: simulate, train, evaluate, stream"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("-c,--config", g.config_file, "key = value config file");
  app.add_option("--set", g.sets, "override one key (key=value), repeatable");
  auto* seed_opt = app.add_option("--seed", g.seed, "seed for every stage (sim, train, infer)");
  app.add_flag("--print-config", g.print_config, "print the resolved configuration with provenance to stderr");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress logging");

  std::string out_dir, manifest, out, metrics, checkpoint, split = "test", input, mode;
  std::size_t episodes = 0;
  bool deterministic = false, strict = false;

  auto* sim = app.add_subcommand("sim-gen", "generate a synthetic dataset and manifest");
  sim->add_option("--out", out_dir, "output directory")->required();
  auto* episodes_opt = sim->add_option("--episodes", episodes, "episode count (data.episodes)");

  auto* tr = app.add_subcommand("train", "train, calibrate on the val split, write a checkpoint");
  tr->add_option("--manifest", manifest, "dataset manifest.json")->required();
  tr->add_option("--out", out, "checkpoint path")->required();
  tr->add_option("--metrics", metrics, "per-step metrics CSV (default <out>.metrics.csv)");

  auto* ev = app.add_subcommand("eval", "score every windowed clip of a split");
  ev->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
  ev->add_option("--manifest", manifest, "dataset manifest.json")->required();
  ev->add_option("--split", split, "split name")->capture_default_str();
  ev->add_option("--out", out_dir, "report directory")->required();
  auto* ev_mode = ev->add_option("--mode", mode, "trigger-only | actor-only | trigger-actor");

  auto* inf = app.add_subcommand("infer", "stream frame JSONL, emit initiation commands as JSONL");
  inf->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
  inf->add_option("--input", input, "frame JSONL file (default stdin)");
  auto* inf_mode = inf->add_option("--mode", mode, "trigger-only | actor-only | trigger-actor");
  inf->add_flag("--deterministic", deterministic, "argmax action selection");
  inf->add_flag("--strict", strict, "abort on malformed input");

  auto* ins = app.add_subcommand("inspect", "summarize a checkpoint");
  ins->add_option("--checkpoint", checkpoint, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    ConfigResolver resolver;
    if (!g.config_file.empty()) resolver.apply_file(g.config_file);
    if (*seed_opt) resolver.set_seed(g.seed, "cli:--seed");
    for (const auto& s : g.sets) resolver.set_assignment(s, "cli:--set");
    if (*episodes_opt) resolver.set("data.episodes", std::to_string(episodes), "cli:--episodes");
    if (*ev_mode) resolver.set("eval.mode", mode, "cli:--mode");
    if (*inf_mode) resolver.set("infer.mode", mode, "cli:--mode");
    if (deterministic) resolver.set("infer.deterministic", "true", "cli:--deterministic");
    if (strict) resolver.set("infer.strict", "true", "cli:--strict");
    RunConfig& cfg = resolver.config();
    cfg.sim.validate();
    cfg.train.validate();
    if (g.print_config) std::cerr << resolver.dump();

    if (*sim) return run_sim_gen(g, cfg, out_dir);
    if (*tr) return run_train(g, cfg, manifest, out, metrics);
    if (*ev) return run_eval(g, cfg, checkpoint, manifest, split, out_dir);
    if (*inf) return run_infer(g, cfg, checkpoint, input);
    if (*ins) return run_inspect(checkpoint);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
