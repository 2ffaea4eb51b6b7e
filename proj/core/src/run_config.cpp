// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "proact/errors.hpp"

namespace proact {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class I>
I parse_int(std::string_view v) {
  I out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("expected a number, got '" + s + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + std::string(v) + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ConfigResolver::ConfigResolver() {
  using R = RunConfig;
  auto add = [&](std::string key, std::string help, auto get, auto set) {
    entries_.emplace(key, Entry{std::move(help), get, set});
    origin_.emplace(std::move(key), "default");
  };
#define PROACT_INT(key, field, type, help)                                              \
  add(key, help, [](const R& c) { return std::to_string(c.field); },                    \
      [](R& c, std::string_view v) { c.field = parse_int<type>(v); })
#define PROACT_REAL(key, field, help)                                                   \
  add(key, help, [](const R& c) { return num(c.field); },                               \
      [](R& c, std::string_view v) { c.field = parse_double(v); })
#define PROACT_BOOL(key, field, help)                                                   \
  add(key, help, [](const R& c) { return std::string(c.field ? "true" : "false"); },   \
      [](R& c, std::string_view v) { c.field = parse_bool(v); })

  PROACT_INT("sim.seed", sim.seed, std::uint64_t, "master seed of the synthetic dataset");
  PROACT_INT("sim.world_seed", sim.world_seed, std::uint64_t, "seed of the intent/class feature prototypes");
  PROACT_INT("sim.fps", sim.fps, int, "frames per second");
  PROACT_REAL("sim.episode_seconds", sim.episode_seconds, "episode length");
  PROACT_REAL("sim.clip_seconds", sim.clip_seconds, "clip window length");
  PROACT_REAL("sim.interaction_seconds", sim.interaction_seconds, "interaction span after a trigger");
  PROACT_INT("sim.max_pedestrians", sim.max_pedestrians, int, "max simultaneous pedestrians");
  PROACT_INT("sim.feature_dim", sim.feature_dim, std::size_t, "object feature width F");
  PROACT_REAL("sim.noise", sim.noise, "feature noise sigma");
  PROACT_REAL("sim.second_lobby_noise_scale", sim.second_lobby_noise_scale, "noise multiplier for B-lobby");
  PROACT_REAL("sim.second_primary_prob", sim.second_primary_prob, "chance of a second engaging pedestrian");
  add("sim.intents", "comma-separated intents to sample",
      [](const R& c) {
        std::string s;
        for (std::size_t i = 0; i < c.sim.intents.size(); ++i) s += (i ? "," : "") + std::string(to_string(c.sim.intents[i]));
        return s;
      },
      [](R& c, std::string_view v) {
        std::vector<Intent> out;
        std::size_t start = 0;
        while (start <= v.size()) {
          const auto comma = v.find(',', start);
          const auto item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
          if (!item.empty()) out.push_back(intent_from_string(item));
          if (comma == std::string_view::npos) break;
          start = comma + 1;
        }
        c.sim.intents = std::move(out);
      });
  PROACT_INT("data.episodes", episodes, std::size_t, "episodes generated by sim-gen");
  PROACT_REAL("data.split.train", split.train, "train fraction");
  PROACT_REAL("data.split.val", split.val, "validation fraction");
  PROACT_REAL("data.split.test", split.test, "test fraction");

  PROACT_INT("model.m", model.m, std::size_t, "tokens per frame M");
  PROACT_INT("model.n", model.n, std::size_t, "frames per window N (must match sim clip frames)");
  PROACT_INT("model.position_dim", model.position_dim, std::size_t, "position embedding width");
  PROACT_INT("model.class_dim", model.class_dim, std::size_t, "class embedding width");
  PROACT_INT("model.position_bins", model.position_bins, int, "bins per bbox component");
  PROACT_INT("model.d_model", model.d_model, std::size_t, "transformer width D");
  PROACT_INT("model.blocks", model.blocks, std::size_t, "transformer blocks");
  PROACT_INT("model.heads", model.heads, std::size_t, "attention heads");
  PROACT_INT("model.ffn_mult", model.ffn_mult, std::size_t, "feed-forward width multiplier");
  PROACT_INT("model.utterance_dim", model.utterance_dim, std::size_t, "utterance embedding width E");
  PROACT_INT("model.expression_vocab", model.expression_vocab, int, "expression ids");
  PROACT_INT("model.motion_vocab", model.motion_vocab, int, "motion ids");
  PROACT_INT("model.expression_dim", model.expression_dim, std::size_t, "expression embedding width");
  PROACT_INT("model.motion_dim", model.motion_dim, std::size_t, "motion embedding width");
  PROACT_REAL("model.ln_eps", model.ln_eps, "layer-norm epsilon");
  PROACT_REAL("model.init_std", model.init_std, "weight init standard deviation");

  PROACT_INT("train.batch_size", train.batch_size, std::size_t, "clips per optimizer step");
  PROACT_INT("train.steps", train.steps, std::int64_t, "optimizer steps");
  PROACT_REAL("train.lr", train.learning_rate, "Adam learning rate");
  PROACT_INT("train.warmup_steps", train.warmup_steps, std::int64_t, "linear learning-rate warm-up");
  PROACT_REAL("train.positive_fraction", train.positive_fraction, "positive share of each batch");
  PROACT_INT("train.seed", train.seed, std::uint64_t, "init and batch sampling seed");
  PROACT_INT("train.eval_every", train.eval_every, std::int64_t, "steps between validation F1 (0 = off)");
  PROACT_INT("train.val_clip_limit", train.val_clip_limit, std::size_t, "validation clips used for periodic F1");
  PROACT_INT("train.threads", train.threads, std::size_t, "worker threads (0 = all cores)");
  PROACT_INT("train.negative_stride", train.negative_stride, std::size_t, "end-frame stride of negative clips");
  PROACT_INT("train.jitter", train.jitter, std::size_t, "max frames a positive window extends past its trigger");
  PROACT_REAL("train.null_action_weight", train.null_action_weight, "weight of the NULL term on y=0 frames");
  PROACT_BOOL("train.final_frame_only", train.final_frame_only, "supervise only the last frame");

  add("infer.mode", "trigger-only | actor-only | trigger-actor",
      [](const R& c) { return std::string(to_string(c.infer.mode)); },
      [](R& c, std::string_view v) { c.infer.mode = inference_mode_from_string(v); });
  PROACT_INT("infer.refractory_frames", infer.refractory_frames, std::size_t, "frames muted after a command");
  PROACT_BOOL("infer.suppress_warm_up", infer.suppress_warm_up, "never fire on warm-up windows");
  PROACT_BOOL("infer.deterministic", infer.deterministic, "argmax instead of sampling");
  PROACT_INT("infer.seed", infer.seed, std::uint64_t, "sampling seed");
  PROACT_BOOL("infer.strict", infer_strict, "abort on a malformed input line");
  add("eval.mode", "trigger-only | actor-only | trigger-actor",
      [](const R& c) { return std::string(to_string(c.eval_mode)); },
      [](R& c, std::string_view v) { c.eval_mode = inference_mode_from_string(v); });
  PROACT_INT("eval.threads", eval_threads, std::size_t, "scoring threads (0 = all cores)");
#undef PROACT_INT
#undef PROACT_REAL
#undef PROACT_BOOL
}

void ConfigResolver::set(std::string_view key, std::string_view value, const std::string& origin) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    it->second.set(cfg_, trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
  origin_[std::string(key)] = origin;
}

void ConfigResolver::set_assignment(std::string_view a, const std::string& origin) {
  const auto eq = a.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(a) + "'");
  set(trim(a.substr(0, eq)), a.substr(eq + 1), origin);
}

void ConfigResolver::apply_text(std::string_view text, const std::string& origin) {
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    try {
      set_assignment(line, origin);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ConfigResolver::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), "file:" + path.string());
}

void ConfigResolver::set_seed(std::uint64_t seed, const std::string& origin) {
  for (const char* key : {"sim.seed", "train.seed", "infer.seed"}) set(key, std::to_string(seed), origin);
}

std::string ConfigResolver::get(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second.get(cfg_);
}

std::vector<std::string> ConfigResolver::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) out.push_back(k);
  return out;
}

const std::string& ConfigResolver::provenance(std::string_view key) const {
  const auto it = origin_.find(key);
  if (it == origin_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::string ConfigResolver::dump(bool with_provenance) const {
  std::ostringstream os;
  for (const auto& [k, e] : entries_) {
    os << k << " = " << e.get(cfg_);
    if (with_provenance) os << "  # " << origin_.at(k);
    os << '\n';
  }
  return os.str();
}

}  // namespace proact
