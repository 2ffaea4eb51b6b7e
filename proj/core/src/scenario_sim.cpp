// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/scenario_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "proact/errors.hpp"

namespace proact {

namespace {

constexpr std::array<std::string_view, kNumIntents> kIntentNames = {
    "pass_by",   "approach_robot", "photo_taking",  "hesitate_lookaround",
    "group_walk", "phone_call",    "luggage_carry", "child_greet"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

using Vec = std::vector<double>;

/// Feature-space landmarks shared by all episodes of a world.
struct World {
  std::array<Vec, kNumIntents> intent;
  std::array<Vec, kNumObjectClasses> cls;
  Vec engaged, leaving, gait;

  World(std::uint64_t seed, std::size_t dim) {
    std::mt19937_64 rng(seed);
    auto draw = [&](double norm) {
      std::normal_distribution<double> g(0.0, norm / std::sqrt(static_cast<double>(dim)));
      Vec v(dim);
      for (auto& x : v) x = g(rng);
      return v;
    };
    for (auto& v : intent) v = draw(3.0);
    for (auto& v : cls) v = draw(3.0);
    engaged = draw(3.0);
    leaving = draw(1.6);
    gait = draw(1.2);
  }
};

enum class Phase { kAbsent, kWalking, kStanding, kEngaged, kLeaving };

struct Track {
  std::uint32_t id = 0;
  ObjectClass cls = ObjectClass::kPerson;
  Intent intent = Intent::kPassBy;
  std::uint32_t owner = 0;  // companions follow their owner's box
  bool child = false;
  bool target = false;
  double gait_offset = 0.0;
  std::vector<std::optional<std::pair<double, double>>> pos;  // (x, depth) per frame, persons only
  std::vector<Phase> phase;
};

struct Motion {
  std::vector<std::optional<std::pair<double, double>>> pos;
  std::vector<Phase> phase;
};

bool inside(double x) { return x >= 0.03 && x <= 0.97; }

/// Walk after the span: drift sideways until leaving the frame.
void leave(Motion& m, int from, double x, double d, double dir) {
  const int frames = static_cast<int>(m.pos.size());
  for (int t = from; t < frames; ++t) {
    const double xl = x + dir * 0.09 * (t - from + 1);
    if (!inside(xl)) break;
    m.pos[t] = std::make_pair(xl, std::min(1.0, d + 0.02 * (t - from + 1)));
    m.phase[t] = Phase::kLeaving;
  }
}

/// Approach the robot; the trigger is the first frame with depth below
/// `threshold`, which the construction places at t1.
Motion approach(int frames, int t1, int span, double threshold, double speed, double x0,
                double drift, double leave_dir) {
  Motion m{std::vector<std::optional<std::pair<double, double>>>(frames), std::vector<Phase>(frames, Phase::kAbsent)};
  const double d1 = threshold - 0.01;
  for (int t = 0; t < std::min(t1, frames); ++t) {
    const double d = d1 + speed * (t1 - t);
    if (d > 1.0) continue;
    m.pos[t] = std::make_pair(x0 + drift * (t - t1), d);
    m.phase[t] = Phase::kWalking;
  }
  for (int t = t1; t < std::min(t1 + span, frames); ++t) {
    m.pos[t] = std::make_pair(x0, d1);
    m.phase[t] = Phase::kEngaged;
  }
  leave(m, t1 + span, x0, d1, leave_dir);
  return m;
}

/// Walk sideways, stop at x_stop, stand `dwell` frames, engage at t1.
Motion stop_then_engage(int frames, int t1, int span, int dwell, double depth, double x_stop,
                        double dir, double speed, bool look_around) {
  Motion m{std::vector<std::optional<std::pair<double, double>>>(frames), std::vector<Phase>(frames, Phase::kAbsent)};
  const int stop = t1 - dwell;
  for (int t = 0; t < std::min(stop, frames); ++t) {
    const double x = x_stop - dir * speed * (stop - t);
    if (!inside(x)) continue;
    m.pos[t] = std::make_pair(x, depth);
    m.phase[t] = Phase::kWalking;
  }
  for (int t = std::max(stop, 0); t < std::min(t1, frames); ++t) {
    const double wobble = look_around ? ((t % 2) ? 0.015 : -0.015) : 0.0;
    m.pos[t] = std::make_pair(x_stop + wobble, depth);
    m.phase[t] = Phase::kStanding;
  }
  for (int t = t1; t < std::min(t1 + span, frames); ++t) {
    m.pos[t] = std::make_pair(x_stop, depth);
    m.phase[t] = Phase::kEngaged;
  }
  leave(m, t1 + span, x_stop, depth, dir);
  return m;
}

Motion pass_by(int frames, int entry, double depth, double dir, double speed) {
  Motion m{std::vector<std::optional<std::pair<double, double>>>(frames), std::vector<Phase>(frames, Phase::kAbsent)};
  const double start = dir > 0 ? 0.03 : 0.97;
  for (int t = std::max(entry, 0); t < frames; ++t) {
    const double x = start + dir * speed * (t - entry);
    if (!inside(x)) break;
    m.pos[t] = std::make_pair(x, depth);
    m.phase[t] = Phase::kWalking;
  }
  return m;
}

BoundingBox person_box(double x, double d, bool child) {
  const double h_adult = 0.12 + 0.45 * (1.0 - d);
  const double h = child ? 0.6 * h_adult : h_adult;
  const double cy = 0.3 + 0.45 * (1.0 - d) + (child ? 0.2 * h_adult : 0.0);
  return {std::clamp(x, 0.0, 1.0), std::clamp(cy, 0.0, 1.0), std::min(0.4 * h, 1.0), std::min(h, 1.0)};
}

BoundingBox companion_box(const BoundingBox& owner, ObjectClass cls) {
  double dx = 0.0, dy = 0.0, sw = 0.3, sh = 0.3;
  switch (cls) {
    case ObjectClass::kSuitcase: dx = 0.6; dy = 0.3; sw = 0.5; sh = 0.35; break;
    case ObjectClass::kCellPhone: dx = 0.2; dy = -0.2; sw = 0.15; sh = 0.08; break;
    case ObjectClass::kBackpack: dx = -0.3; dy = -0.1; sw = 0.45; sh = 0.3; break;
    case ObjectClass::kHandbag: dx = 0.45; dy = 0.1; sw = 0.3; sh = 0.15; break;
    case ObjectClass::kTie: dx = 0.0; dy = -0.15; sw = 0.1; sh = 0.2; break;
    default: break;
  }
  return {std::clamp(owner.cx + dx * owner.w, 0.0, 1.0), std::clamp(owner.cy + dy * owner.h, 0.0, 1.0),
          std::max(0.005, sw * owner.w), std::max(0.005, sh * owner.h)};
}

/// Draws the primary interaction (and its companions) triggering at t1.
void add_primary(Intent intent, int frames, int t1, int span, std::mt19937_64& rng,
                 std::vector<Track>& tracks, std::uint32_t& next_id) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto between = [&](double a, double b) { return a + (b - a) * u(rng); };
  const double leave_dir = u(rng) < 0.5 ? -1.0 : 1.0;
  auto person = [&](Motion m, bool child, bool target) {
    Track t;
    t.id = next_id++;
    t.intent = intent;
    t.child = child;
    t.target = target;
    t.gait_offset = between(0.0, 4.0);
    t.pos = std::move(m.pos);
    t.phase = std::move(m.phase);
    if (!target)  // a chaperone stands by instead of engaging
      for (auto& p : t.phase)
        if (p == Phase::kEngaged) p = Phase::kStanding;
    tracks.push_back(std::move(t));
    return tracks.back().id;
  };
  auto companion = [&](std::uint32_t owner, ObjectClass cls) {
    Track t;
    t.id = next_id++;
    t.cls = cls;
    t.intent = intent;
    t.owner = owner;
    tracks.push_back(std::move(t));
  };
  const double x0 = between(0.2, 0.8);
  const double speed = between(0.06, 0.11);
  const double drift = between(-0.006, 0.006);
  switch (intent) {
    case Intent::kApproachRobot:
      person(approach(frames, t1, span, 0.30, speed, x0, drift, leave_dir), false, true);
      break;
    case Intent::kLuggageCarry: {
      const auto id = person(approach(frames, t1, span, 0.40, 0.7 * speed, x0, drift, leave_dir), false, true);
      companion(id, ObjectClass::kSuitcase);
      break;
    }
    case Intent::kGroupWalk: {
      const int members = 2 + static_cast<int>(rng() % 2);
      const double xc = between(0.3, 0.7);
      for (int k = 0; k < members; ++k)
        person(approach(frames, t1, span, 0.35, speed, xc + 0.09 * (k - 0.5 * (members - 1)), drift, leave_dir),
               false, true);
      break;
    }
    case Intent::kChildGreet: {
      person(approach(frames, t1, span, 0.30, speed, x0 - 0.06, drift, leave_dir), false, false);
      person(approach(frames, t1, span, 0.30, speed, x0 + 0.04, drift, leave_dir), true, true);
      break;
    }
    case Intent::kPhotoTaking: {
      const auto id = person(stop_then_engage(frames, t1, span, 2, between(0.4, 0.7), x0, leave_dir, speed,
                                              false), false, true);
      companion(id, ObjectClass::kCellPhone);
      break;
    }
    case Intent::kHesitateLookaround:
      person(stop_then_engage(frames, t1, span, 3, between(0.35, 0.6), x0, leave_dir, 0.7 * speed, true),
             false, true);
      break;
    case Intent::kPhoneCall: {
      const auto id = person(stop_then_engage(frames, t1, span, 4, between(0.45, 0.75), x0, leave_dir,
                                              0.8 * speed, false), false, true);
      companion(id, ObjectClass::kCellPhone);
      break;
    }
    case Intent::kPassBy:
      break;
  }
}

}  // namespace

std::string_view to_string(Intent intent) { return kIntentNames.at(static_cast<std::size_t>(intent)); }

Intent intent_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kIntentNames.size(); ++i)
    if (kIntentNames[i] == name) return static_cast<Intent>(i);
  throw ConfigError("unknown intent '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (fps < 1) throw ConfigError("sim.fps must be >= 1");
  if (window_frames() < 1) throw ConfigError("sim.clip_seconds must cover at least one frame");
  if (span_frames() < 1) throw ConfigError("sim.interaction_seconds must cover at least one frame");
  if (episode_frames() < span_frames() + 12)
    throw ConfigError("sim.episode_seconds too short for one interaction");
  if (!(noise >= 0.0)) throw ConfigError("sim.noise must be >= 0");
  if (feature_dim == 0) throw ConfigError("sim.feature_dim must be >= 1");
  if (intents.empty()) throw ConfigError("sim.intents must not be empty");
  if (max_pedestrians < 3) throw ConfigError("sim.max_pedestrians must be >= 3");
  if (second_primary_prob < 0.0 || second_primary_prob > 1.0)
    throw ConfigError("sim.second_primary_prob must be in [0,1]");
}

int SimConfig::episode_frames() const { return static_cast<int>(std::lround(episode_seconds * fps)); }
int SimConfig::window_frames() const { return static_cast<int>(std::lround(clip_seconds * fps)); }
int SimConfig::span_frames() const { return static_cast<int>(std::lround(interaction_seconds * fps)); }

const std::map<Intent, MultiModalAction>& intent_action_table() {
  static const std::map<Intent, MultiModalAction> table = {
      {Intent::kPassBy, {"Have a nice day!", 1, 2}},
      {Intent::kApproachRobot, {"Hello! How can I help you?", 1, 3}},
      {Intent::kPhotoTaking, {"How is my pose?", 5, 7}},
      {Intent::kHesitateLookaround, {"Are you looking for some places?", 3, 4}},
      {Intent::kGroupWalk, {"Good morning, everyone!", 2, 2}},
      {Intent::kPhoneCall, {"Sorry to interrupt, I am here if you need me.", 4, 5}},
      {Intent::kLuggageCarry, {"Do you need help with your luggage?", 6, 6}},
      {Intent::kChildGreet, {"Hi little friend, want to play a game with me?", 7, 8}},
  };
  return table;
}

std::vector<MultiModalAction> action_catalog() {
  std::vector<MultiModalAction> out;
  for (const auto& [intent, action] : intent_action_table()) out.push_back(action);
  return out;
}

std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL));
}

SimEpisode generate_episode(const SimConfig& cfg, std::uint64_t seed, const std::string& episode_id) {
  cfg.validate();
  const World world(cfg.world_seed, cfg.feature_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto between = [&](double a, double b) { return a + (b - a) * u(rng); };
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  const int frames = cfg.episode_frames();
  const int span = cfg.span_frames();
  SimEpisode out;
  Episode& ep = out.episode;
  ep.id = episode_id;
  const bool lobby_b = u(rng) < 0.5;
  ep.source = lobby_b ? "B-lobby" : "A-lobby";
  const double sigma = cfg.noise * (lobby_b ? cfg.second_lobby_noise_scale : 1.0);

  std::vector<Track> tracks;
  std::uint32_t next_id = 1;
  std::vector<std::pair<int, Intent>> triggers;

  const Intent primary = cfg.intents[rng() % cfg.intents.size()];
  out.truth.primary = primary;
  std::vector<Intent> engaging;
  for (Intent i : cfg.intents)
    if (i != Intent::kPassBy) engaging.push_back(i);

  if (primary != Intent::kPassBy) {
    const int t1 = pick(6, frames - span - 1);
    add_primary(primary, frames, t1, span, rng, tracks, next_id);
    triggers.emplace_back(t1, primary);
    if (t1 + span + 2 <= frames - span - 1 && u(rng) < cfg.second_primary_prob) {
      const int t2 = pick(t1 + span + 2, frames - span - 1);
      const Intent second = engaging[rng() % engaging.size()];
      add_primary(second, frames, t2, span, rng, tracks, next_id);
      triggers.emplace_back(t2, second);
    }
  }

  int persons = 0;
  for (const auto& t : tracks) persons += t.cls == ObjectClass::kPerson;
  const int walkers = primary == Intent::kPassBy ? pick(1, 3) : pick(0, 3);
  for (int k = 0; k < walkers && persons < cfg.max_pedestrians; ++k, ++persons) {
    Track t;
    t.id = next_id++;
    t.intent = Intent::kPassBy;
    t.gait_offset = between(0.0, 4.0);
    auto m = pass_by(frames, pick(-10, frames - 4), between(0.45, 0.9), u(rng) < 0.5 ? -1.0 : 1.0,
                     between(0.05, 0.09));
    t.pos = std::move(m.pos);
    t.phase = std::move(m.phase);
    tracks.push_back(std::move(t));
  }

  // Occasional accessories on any person.
  const std::size_t people = tracks.size();
  for (std::size_t k = 0; k < people; ++k) {
    if (tracks[k].cls != ObjectClass::kPerson || u(rng) >= 0.15) continue;
    static constexpr std::array<ObjectClass, 3> kAccessories = {ObjectClass::kBackpack, ObjectClass::kHandbag,
                                                                ObjectClass::kTie};
    Track c;
    c.id = next_id++;
    c.cls = kAccessories[rng() % kAccessories.size()];
    c.intent = tracks[k].intent;
    c.owner = tracks[k].id;
    tracks.push_back(std::move(c));
  }
  std::map<std::uint32_t, std::size_t> by_id;
  for (std::size_t k = 0; k < tracks.size(); ++k) by_id[tracks[k].id] = k;

  const std::size_t dim = cfg.feature_dim;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int t = 0; t < frames; ++t) {
    FramePacket f;
    f.episode_id = ep.id;
    f.frame_idx = t;
    f.timestamp_ms = static_cast<std::int64_t>(t) * 1000 / cfg.fps;
    for (const auto& tr : tracks) {
      const Track& body = tr.owner ? tracks[by_id.at(tr.owner)] : tr;
      if (!body.pos[t]) continue;
      const auto [x, d] = *body.pos[t];
      const BoundingBox pb = person_box(x, d, body.child);
      DetectedObject o;
      o.track_id = tr.id;
      o.cls = tr.cls;
      const BoundingBox b = tr.owner ? companion_box(pb, tr.cls) : pb;
      o.bbox = {round4(b.cx), round4(b.cy), round4(b.w), round4(b.h)};
      o.feature.resize(dim);
      const Vec& proto = world.intent[static_cast<std::size_t>(tr.intent)];
      for (std::size_t i = 0; i < dim; ++i) {
        double v;
        if (tr.owner) {
          v = world.cls[static_cast<std::size_t>(tr.cls)][i] + 0.5 * proto[i];
        } else {
          v = proto[i];
          switch (tr.phase[t]) {
            case Phase::kWalking:
              v += world.gait[i] * std::sin(std::numbers::pi / 2.0 * (t + tr.gait_offset));
              break;
            case Phase::kEngaged: v += world.engaged[i]; break;
            case Phase::kLeaving: v += world.leaving[i]; break;
            default: break;
          }
        }
        o.feature[i] = static_cast<float>(round4(v + sigma * noise(rng)));
      }
      f.objects.push_back(std::move(o));
    }
    ep.frames.push_back(std::move(f));
  }

  std::sort(triggers.begin(), triggers.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t1, intent] : triggers) {
    Annotation a;
    a.frame_idx = t1;
    a.action = intent_action_table().at(intent);
    for (const auto& tr : tracks)
      if (tr.owner == 0 && tr.target && tr.phase[t1] == Phase::kEngaged) a.target_track_ids.push_back(tr.id);
    if (a.target_track_ids.empty()) throw LabelError("simulator produced an annotation without targets");
    ep.annotations.push_back(std::move(a));
  }
  for (const auto& tr : tracks) {
    out.truth.intent[tr.id] = tr.intent;
    out.truth.is_person[tr.id] = tr.cls == ObjectClass::kPerson;
  }
  return out;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& r) {
  if (n < 3) throw ConfigError("need at least 3 episodes for train/val/test splits, got " + std::to_string(n));
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  auto count = [&](double ratio) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
  };
  const std::size_t val = count(r.val), test = count(r.test);
  if (val + test >= n) throw ConfigError("split ratios leave no training episodes");
  return {n - val - test, val, test};
}

std::string sim_config_to_string(const SimConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "sim.seed=" << c.seed << "\nsim.world_seed=" << c.world_seed << "\nsim.fps=" << c.fps
     << "\nsim.episode_seconds=" << c.episode_seconds << "\nsim.clip_seconds=" << c.clip_seconds
     << "\nsim.interaction_seconds=" << c.interaction_seconds << "\nsim.max_pedestrians=" << c.max_pedestrians
     << "\nsim.feature_dim=" << c.feature_dim << "\nsim.intents=";
  for (std::size_t i = 0; i < c.intents.size(); ++i) os << (i ? "," : "") << to_string(c.intents[i]);
  os << "\nsim.noise=" << c.noise << "\nsim.second_lobby_noise_scale=" << c.second_lobby_noise_scale
     << "\nsim.second_primary_prob=" << c.second_primary_prob << "\n";
  return os.str();
}

Manifest generate_dataset(const SimConfig& cfg, std::size_t n_episodes, const SplitRatios& ratios,
                          const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto counts = split_counts(n_episodes, ratios);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "episodes", ec);
  if (ec) throw InputError("cannot create " + (out_dir / "episodes").string() + ": " + ec.message());

  Manifest m;
  m.master_seed = cfg.seed;
  m.sim_config = sim_config_to_string(cfg);
  m.action_catalog = action_catalog();
  m.directory = out_dir;
  static constexpr std::array<const char*, 3> kSplits = {"train", "val", "test"};
  std::size_t index = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& entries = m.splits[kSplits[s]];
    for (std::size_t k = 0; k < counts[s]; ++k, ++index) {
      char id[32];
      std::snprintf(id, sizeof id, "ep-%06zu", index);
      const auto seed = episode_seed(cfg.seed, index);
      const auto sim = generate_episode(cfg, seed, id);
      const std::string file = std::string("episodes/") + id + ".jsonl";
      atomic_write(out_dir / file, episode_to_string(sim.episode));
      entries.push_back({id, file, sim.episode.source, sim.episode.frames.size(),
                         sim.episode.annotations.size(), seed});
    }
  }
  atomic_write(out_dir / "manifest.json", manifest_to_string(m));
  return m;
}

ProbeResult linear_intent_probe(const SimConfig& cfg, std::size_t n_objects, std::uint64_t seed) {
  std::vector<std::vector<float>> feats;
  std::vector<int> labels;
  std::mt19937_64 pick(seed);
  for (std::uint64_t e = 0; feats.size() < n_objects; ++e) {
    const auto sim = generate_episode(cfg, episode_seed(seed, e), "probe");
    // One detection per track, from a random frame in which it is visible.
    std::map<std::uint32_t, std::vector<const DetectedObject*>> seen;
    for (const auto& f : sim.episode.frames)
      for (const auto& o : f.objects) seen[o.track_id].push_back(&o);
    for (const auto& [id, objs] : seen) {
      if (feats.size() >= n_objects) break;
      feats.push_back(objs[pick() % objs.size()]->feature);
      labels.push_back(static_cast<int>(sim.truth.intent.at(id)));
    }
  }
  const auto n = static_cast<Eigen::Index>(feats.size());
  const auto dim = static_cast<Eigen::Index>(cfg.feature_dim);
  const Eigen::Index n_train = n * 7 / 10;
  Eigen::MatrixXd x(n, dim + 1);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, kNumIntents);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    x(i, dim) = 1.0;
    y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  const Eigen::MatrixXd xt = x.topRows(n_train);
  Eigen::MatrixXd gram = xt.transpose() * xt;
  gram.diagonal().array() += 1e-2;
  const Eigen::MatrixXd w = gram.ldlt().solve(xt.transpose() * y.topRows(n_train));
  const Eigen::MatrixXd scores = x * w;
  ProbeResult r;
  r.samples = feats.size();
  std::size_t hit_train = 0, hit_test = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best;
    scores.row(i).maxCoeff(&best);
    const bool hit = best == labels[static_cast<std::size_t>(i)];
    (i < n_train ? hit_train : hit_test) += hit;
  }
  r.train_accuracy = static_cast<double>(hit_train) / static_cast<double>(n_train);
  r.test_accuracy = static_cast<double>(hit_test) / static_cast<double>(n - n_train);
  return r;
}

}  // namespace proact
