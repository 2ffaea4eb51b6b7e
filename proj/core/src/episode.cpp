// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/episode.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "proact/errors.hpp"

namespace proact {

using nlohmann::json;

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

json action_to_json(const MultiModalAction& a) {
  return {{"utterance", a.utterance}, {"expression_id", a.expression_id}, {"motion_id", a.motion_id}};
}

MultiModalAction action_from_json(const json& j) {
  return {j.at("utterance").get<std::string>(), j.at("expression_id").get<int>(),
          j.at("motion_id").get<int>()};
}

ObjectClass class_from_json(const json& j) {
  if (j.is_string()) return object_class_from_string(j.get<std::string>());
  if (j.is_number_integer()) return object_class_from_id(j.get<int>());
  throw InputError("class_id must be a name or an integer");
}

}  // namespace

std::optional<std::size_t> Episode::position_of(std::int64_t frame_idx) const {
  // Frames are contiguous in generated data; fall back to a scan otherwise.
  if (!frames.empty()) {
    const auto guess = frame_idx - frames.front().frame_idx;
    if (guess >= 0 && static_cast<std::size_t>(guess) < frames.size() &&
        frames[static_cast<std::size_t>(guess)].frame_idx == frame_idx)
      return static_cast<std::size_t>(guess);
  }
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].frame_idx == frame_idx) return i;
  return std::nullopt;
}

std::string frame_to_json_line(const FramePacket& frame, const Annotation* annotation) {
  json objects = json::array();
  for (const auto& o : frame.objects) {
    json feature = json::array();
    for (float v : o.feature) feature.push_back(round4(v));
    objects.push_back({{"track_id", o.track_id},
                       {"class_id", std::string(to_string(o.cls))},
                       {"bbox", {round4(o.bbox.cx), round4(o.bbox.cy), round4(o.bbox.w), round4(o.bbox.h)}},
                       {"feature", std::move(feature)}});
  }
  json j = {{"episode_id", frame.episode_id},
            {"frame_idx", frame.frame_idx},
            {"timestamp_ms", frame.timestamp_ms},
            {"objects", std::move(objects)}};
  if (annotation)
    j["annotation"] = {{"target_track_ids", annotation->target_track_ids},
                       {"action", action_to_json(annotation->action)}};
  return j.dump();
}

ParsedFrame parse_frame_line(std::string_view line) {
  ParsedFrame out;
  try {
    const json j = json::parse(line);
    out.frame.episode_id = j.at("episode_id").get<std::string>();
    out.frame.frame_idx = j.at("frame_idx").get<std::int64_t>();
    out.frame.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    if (out.frame.frame_idx < 0) throw InputError("negative frame_idx");
    for (const auto& jo : j.at("objects")) {
      DetectedObject o;
      o.track_id = jo.at("track_id").get<std::uint32_t>();
      o.cls = class_from_json(jo.at("class_id"));
      const auto& b = jo.at("bbox");
      if (!b.is_array() || b.size() != 4) throw InputError("bbox must have 4 components");
      o.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      for (double v : {o.bbox.cx, o.bbox.cy, o.bbox.w, o.bbox.h})
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("bbox component outside [0,1]");
      if (jo.contains("feature"))
        for (const auto& v : jo.at("feature")) o.feature.push_back(static_cast<float>(v.get<double>()));
      out.frame.objects.push_back(std::move(o));
    }
    if (j.contains("annotation") && !j.at("annotation").is_null()) {
      const auto& ja = j.at("annotation");
      Annotation a;
      a.frame_idx = out.frame.frame_idx;
      a.target_track_ids = ja.at("target_track_ids").get<std::vector<std::uint32_t>>();
      a.action = action_from_json(ja.at("action"));
      out.annotation = std::move(a);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed frame line: ") + e.what());
  }
  return out;
}

void write_episode(const Episode& episode, std::ostream& out) {
  std::size_t next = 0;
  for (const auto& f : episode.frames) {
    const Annotation* a = nullptr;
    if (next < episode.annotations.size() && episode.annotations[next].frame_idx == f.frame_idx)
      a = &episode.annotations[next++];
    out << frame_to_json_line(f, a) << '\n';
  }
  if (next != episode.annotations.size())
    throw LabelError("episode '" + episode.id + "' has an annotation on a missing frame");
}

std::string episode_to_string(const Episode& episode) {
  std::ostringstream os;
  write_episode(episode, os);
  return os.str();
}

Episode read_episode(const std::filesystem::path& path, const std::string& source) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open episode file " + path.string());
  Episode ep;
  ep.source = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ParsedFrame pf;
    try {
      pf = parse_frame_line(line);
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (ep.frames.empty()) ep.id = pf.frame.episode_id;
    if (pf.frame.episode_id != ep.id)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": mixed episode ids");
    if (!ep.frames.empty() && pf.frame.frame_idx <= ep.frames.back().frame_idx)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": frames out of order");
    if (pf.annotation) ep.annotations.push_back(std::move(*pf.annotation));
    ep.frames.push_back(std::move(pf.frame));
  }
  return ep;
}

// --- manifest ------------------------------------------------------------------

std::size_t Manifest::positives(const std::string& name) const {
  std::size_t n = 0;
  for (const auto& e : split(name)) n += e.positives;
  return n;
}

const std::vector<ManifestEntry>& Manifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw InputError("manifest has no '" + name + "' split");
  return it->second;
}

std::string manifest_to_string(const Manifest& m) {
  json splits = json::object();
  for (const auto& [name, entries] : m.splits) {
    json list = json::array();
    std::size_t positives = 0;
    for (const auto& e : entries) {
      list.push_back({{"id", e.id},
                      {"file", e.file},
                      {"source", e.source},
                      {"frames", e.frames},
                      {"positives", e.positives},
                      {"seed", e.seed}});
      positives += e.positives;
    }
    splits[name] = {{"episodes", entries.size()}, {"positives", positives}, {"files", std::move(list)}};
  }
  json catalog = json::array();
  for (const auto& a : m.action_catalog) catalog.push_back(action_to_json(a));
  const json j = {{"format", "proact-manifest"},
                  {"version", m.version},
                  {"master_seed", m.master_seed},
                  {"sim_config", m.sim_config},
                  {"action_catalog", std::move(catalog)},
                  {"splits", std::move(splits)}};
  return j.dump(2) + "\n";
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  Manifest m;
  try {
    const json j = json::parse(in);
    if (j.value("format", "") != "proact-manifest") throw InputError("not a manifest: " + path.string());
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw InputError("unsupported manifest version " + std::to_string(m.version));
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.sim_config = j.value("sim_config", "");
    for (const auto& a : j.value("action_catalog", json::array())) m.action_catalog.push_back(action_from_json(a));
    for (const auto& [name, s] : j.at("splits").items()) {
      auto& entries = m.splits[name];
      for (const auto& e : s.at("files"))
        entries.push_back({e.at("id").get<std::string>(), e.at("file").get<std::string>(),
                           e.value("source", ""), e.value("frames", std::size_t{0}),
                           e.value("positives", std::size_t{0}), e.value("seed", std::uint64_t{0})});
    }
  } catch (const json::exception& e) {
    throw InputError("malformed manifest " + path.string() + ": " + e.what());
  }
  m.directory = path.parent_path();
  return m;
}

std::vector<Episode> load_split(const Manifest& manifest, const std::string& split) {
  std::vector<Episode> out;
  for (const auto& e : manifest.split(split)) {
    auto ep = read_episode(manifest.directory / e.file, e.source);
    if (ep.id != e.id) throw InputError("episode file " + e.file + " holds '" + ep.id + "', expected '" + e.id + "'");
    out.push_back(std::move(ep));
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace proact
