// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#include "proact/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "proact/episode.hpp"
#include "proact/errors.hpp"

namespace proact {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

template <class U>
U get(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(U) > bytes.size()) throw CheckpointError("checkpoint truncated");
  U v;
  std::memcpy(&v, bytes.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json config_json(const ModelConfig& c) {
  return {{"m", c.m},
          {"n", c.n},
          {"feature_dim", c.feature_dim},
          {"position_dim", c.position_dim},
          {"class_dim", c.class_dim},
          {"position_bins", c.position_bins},
          {"d_model", c.d_model},
          {"blocks", c.blocks},
          {"heads", c.heads},
          {"ffn_mult", c.ffn_mult},
          {"num_actions", c.num_actions},
          {"utterance_dim", c.utterance_dim},
          {"expression_vocab", c.expression_vocab},
          {"motion_vocab", c.motion_vocab},
          {"expression_dim", c.expression_dim},
          {"motion_dim", c.motion_dim},
          {"ln_eps", c.ln_eps},
          {"init_std", c.init_std}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.m = j.at("m").get<std::size_t>();
  c.n = j.at("n").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.position_dim = j.at("position_dim").get<std::size_t>();
  c.class_dim = j.at("class_dim").get<std::size_t>();
  c.position_bins = j.at("position_bins").get<int>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ffn_mult = j.at("ffn_mult").get<std::size_t>();
  c.num_actions = j.at("num_actions").get<std::size_t>();
  c.utterance_dim = j.at("utterance_dim").get<std::size_t>();
  c.expression_vocab = j.at("expression_vocab").get<int>();
  c.motion_vocab = j.at("motion_vocab").get<int>();
  c.expression_dim = j.at("expression_dim").get<std::size_t>();
  c.motion_dim = j.at("motion_dim").get<std::size_t>();
  c.ln_eps = j.at("ln_eps").get<double>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig model_config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
}

Checkpoint make_checkpoint(const DecisionNetwork<float>& net, const ActionCodebook& codebook,
                           const UtteranceEmbedder& embedder, const Thresholds& thresholds,
                           std::map<std::string, std::string> training) {
  Checkpoint c;
  c.config = net.config();
  c.params = net.params().cast<float>();
  for (std::size_t i = 0; i < c.params.size(); ++i) c.params.grad(i).resize(0, 0);
  c.codebook = codebook;
  c.embedder_id = embedder.id();
  c.embedder_dim = embedder.dimension();
  c.thresholds = thresholds;
  c.training = std::move(training);
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json meta;
  meta["format"] = "proact-checkpoint";
  meta["model"] = config_json(ckpt.config);
  json actions = json::array();
  for (const auto& a : ckpt.codebook.actions())
    actions.push_back({{"utterance", a.utterance}, {"expression_id", a.expression_id}, {"motion_id", a.motion_id}});
  meta["codebook"] = actions;
  meta["embedder"] = {{"id", ckpt.embedder_id}, {"dim", ckpt.embedder_dim}};
  meta["thresholds"] = {{"trigger", ckpt.thresholds.trigger},
                        {"target", ckpt.thresholds.target},
                        {"calibrated", ckpt.thresholds.calibrated}};
  meta["training"] = ckpt.training;
  meta["optimizer_step"] = ckpt.params.step();
  json dir = json::array();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& p = ckpt.params.at(i);
    dir.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  meta["tensors"] = dir;
  const std::string meta_text = meta.dump();

  std::string out;
  out.reserve(kCheckpointMagic.size() + 16 + meta_text.size() + ckpt.params.total_count() * 4);
  out.append(kCheckpointMagic);
  put<std::uint32_t>(out, ckpt.version);
  put<std::uint64_t>(out, meta_text.size());
  out.append(meta_text);
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& v = ckpt.params.value(i);
    out.append(reinterpret_cast<const char*>(v.data()), static_cast<std::size_t>(v.size()) * sizeof(float));
  }
  put<std::uint32_t>(out, crc32_of(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  const std::size_t header = kCheckpointMagic.size() + 4 + 8;
  if (bytes.size() < header + 4 || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw CheckpointError("not a checkpoint file (bad magic or truncated header)");
  std::size_t tail = bytes.size() - 4;
  const auto stored = get<std::uint32_t>(bytes, tail);
  if (crc32_of(bytes.substr(0, bytes.size() - 4)) != stored)
    throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated file)");

  std::size_t pos = kCheckpointMagic.size();
  Checkpoint c;
  c.version = get<std::uint32_t>(bytes, pos);
  if (c.version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(c.version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto meta_len = get<std::uint64_t>(bytes, pos);
  if (meta_len > bytes.size() - 4 - pos) throw CheckpointError("checkpoint metadata length out of range");
  try {
    const json meta = json::parse(bytes.substr(pos, meta_len));
    pos += meta_len;
    if (meta.at("format") != "proact-checkpoint") throw CheckpointError("unknown checkpoint format tag");
    c.config = config_from(meta.at("model"));
    std::vector<MultiModalAction> actions;
    for (const auto& a : meta.at("codebook"))
      actions.push_back({a.at("utterance").get<std::string>(), a.at("expression_id").get<int>(),
                         a.at("motion_id").get<int>()});
    c.codebook = ActionCodebook::from_actions(std::move(actions));
    c.embedder_id = meta.at("embedder").at("id").get<std::string>();
    c.embedder_dim = meta.at("embedder").at("dim").get<std::size_t>();
    c.thresholds.trigger = meta.at("thresholds").at("trigger").get<double>();
    c.thresholds.target = meta.at("thresholds").at("target").get<double>();
    c.thresholds.calibrated = meta.at("thresholds").at("calibrated").get<bool>();
    c.training = meta.at("training").get<std::map<std::string, std::string>>();
    for (const auto& t : meta.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw CheckpointError("negative tensor shape");
      const auto id = c.params.add(t.at("name").get<std::string>(), rows, cols);
      const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(float);
      if (n > bytes.size() - 4 - pos) throw CheckpointError("checkpoint tensor data truncated");
      std::memcpy(c.params.value(id).data(), bytes.data() + pos, n);
      c.params.grad(id).resize(0, 0);
      pos += n;
    }
    c.params.set_step(meta.at("optimizer_step").get<std::int64_t>());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }
  if (pos != bytes.size() - 4) throw CheckpointError("checkpoint has trailing bytes");
  if (c.config.num_actions != c.codebook.size())
    throw CheckpointError("checkpoint codebook size does not match the model config");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  atomic_write(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

// --- policy --------------------------------------------------------------------

namespace {

DecisionNetwork<float> network_from(const Checkpoint& ckpt) {
  try {
    DecisionNetwork<float> net(ckpt.config);
    net.params().assign_values(ckpt.params);
    net.params().set_step(ckpt.params.step());
    return net;
  } catch (const NumericError& e) {
    throw CheckpointError(std::string("checkpoint tensors do not match its model config: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint model config invalid: ") + e.what());
  }
}

}  // namespace

Policy::Policy(const Checkpoint& ckpt)
    : Policy(network_from(ckpt), ckpt.codebook,
             std::shared_ptr<const UtteranceEmbedder>(make_embedder(ckpt.embedder_id, ckpt.embedder_dim)),
             ckpt.thresholds) {}

Policy::Policy(DecisionNetwork<float> net, ActionCodebook codebook,
               std::shared_ptr<const UtteranceEmbedder> embedder, Thresholds thresholds)
    : net_(std::move(net)),
      codebook_(std::move(codebook)),
      embedder_(std::move(embedder)),
      thresholds_(thresholds) {
  if (codebook_.size() != net_.config().num_actions)
    throw ConfigError("codebook has " + std::to_string(codebook_.size()) + " actions, model expects " +
                      std::to_string(net_.config().num_actions));
  phi_ = net_.encode_actions(codebook_, *embedder_);
}

DecisionOutput<float> Policy::forward(const ClipWindow& window) const {
  return net_.model().forward(window, net_.params(), phi_);
}

FramePrediction<float> Policy::predict(const ClipWindow& window) const {
  return net_.model().predict_last(window, net_.params(), phi_);
}

Checkpoint Policy::to_checkpoint(std::map<std::string, std::string> training) const {
  return make_checkpoint(net_, codebook_, *embedder_, thresholds_, std::move(training));
}

}  // namespace proact
