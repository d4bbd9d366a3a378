/*
 * Copyright 2026 The edr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "edr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <stdexcept>

namespace edr {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object, remembering which keys were consumed
// so that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError(where() + "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.emplace_back(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InputError(where(key) + e.what());
    }
  }

  // Nested object, or nullptr when absent.
  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.emplace_back(key);
    return &j_.at(key);
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw InputError(where() + "unknown key '" + key + "'");
      }
    }
  }

 private:
  std::string where(const char* key = nullptr) const {
    std::string p = key ? sub(key) : path_;
    return "config" + (p.empty() ? std::string() : " " + p) + ": ";
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

template <std::size_t N>
void get_array(Section& s, const char* key, std::array<double, N>& out) {
  std::vector<double> v(out.begin(), out.end());
  s.get(key, v);
  if (v.size() != N) {
    throw InputError("config " + s.sub(key) + ": expected " + std::to_string(N) + " entries, got " +
                     std::to_string(v.size()));
  }
  std::copy(v.begin(), v.end(), out.begin());
}

std::string_view codec_name(CodecMode m) {
  return m == CodecMode::kModeled ? "modeled" : "real-pixels";
}

CodecMode parse_codec(const std::string& s) {
  if (s == "modeled") return CodecMode::kModeled;
  if (s == "real-pixels") return CodecMode::kRealPixels;
  throw InputError("config codec: unknown mode '" + s + "'");
}

ScoreMode parse_score_mode(const std::string& s) {
  if (s == "gt") return ScoreMode::kGroundTruth;
  if (s == "replay") return ScoreMode::kReplay;
  if (s == "synthetic") return ScoreMode::kSynthetic;
  throw InputError("config scores: unknown mode '" + s + "'");
}

std::string_view distribution_name(NoiseDistribution d) {
  return d == NoiseDistribution::kGaussian ? "gaussian" : "uniform";
}

NoiseDistribution parse_distribution(const std::string& s) {
  if (s == "gaussian") return NoiseDistribution::kGaussian;
  if (s == "uniform") return NoiseDistribution::kUniform;
  throw InputError("config synth.noise.distribution: unknown distribution '" + s + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string_view score_mode_name(ScoreMode m) {
  switch (m) {
    case ScoreMode::kGroundTruth:
      return "gt";
    case ScoreMode::kReplay:
      return "replay";
    case ScoreMode::kSynthetic:
      break;
  }
  return "synthetic";
}

void RunConfig::validate() const {
  value.validate();
  dmm.validate();
  lbo.validate();
  compression.validate();
  synth.validate();
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and nonnegative");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and nonnegative");
  for (double t : thresholds) {
    require(t >= 0.0 && t <= 1.0, "class thresholds must lie in [0,1]");
  }
  require(classes == ClassModel::from_likelihoods(classes.likelihoods),
          "class model information measures do not match its likelihoods");
  require(capacity > 0.0, "capacity must be positive");
  require(encode.min_quality >= 1 && encode.max_quality <= 100 &&
              encode.min_quality <= encode.max_quality,
          "codec quality range must satisfy 1 <= min <= max <= 100");
  require(encode.reference_bytes > 0, "reference byte count must be positive");
  require(scores != ScoreMode::kReplay || !replay_path.empty(),
          "replay scores need a trace path");
  require(queue_capacity >= 1, "queue capacity must be at least 1");
}

json config_to_json(const RunConfig& c) {
  const auto& n = c.synth.noise;
  return json{
      {"value", {{"alpha", c.value.alpha}, {"beta", c.value.beta}}},
      {"dmm",
       {{"max_len", c.dmm.max_len},
        {"similarity_floor", c.dmm.similarity_floor},
        {"value_jump", c.dmm.value_jump}}},
      {"lbo", {{"eta", c.lbo.eta}, {"zeta", c.lbo.zeta}}},
      {"compression", {{"a1", c.compression.a1}, {"a2", c.compression.a2}, {"a3", c.compression.a3}}},
      {"codec", codec_name(c.codec)},
      {"encode",
       {{"min_quality", c.encode.min_quality},
        {"max_quality", c.encode.max_quality},
        {"discard_on_zero", c.encode.discard_on_zero},
        {"reference_bytes", c.encode.reference_bytes}}},
      {"lambda", c.lambda},
      {"sigma", c.sigma},
      {"thresholds", c.thresholds},
      {"likelihoods", c.classes.likelihoods},
      {"capacity", std::isinf(c.capacity) ? json(nullptr) : json(c.capacity)},
      {"policy", policy_name(c.policy)},
      {"scores", score_mode_name(c.scores)},
      {"replay_path", c.replay_path},
      {"synth",
       {{"frames", c.synth.frames},
        {"anomaly_rate", c.synth.anomaly_rate},
        {"class_mix", c.synth.class_mix},
        {"clip_min", c.synth.clip_min},
        {"clip_max", c.synth.clip_max},
        {"scene_length", c.synth.scene_length},
        {"frame_bytes", c.synth.frame_bytes},
        {"size_jitter", c.synth.size_jitter},
        {"mean_tracks", c.synth.mean_tracks},
        {"track_birth_prob", c.synth.track_birth_prob},
        {"track_death_prob", c.synth.track_death_prob},
        {"noise",
         {{"vad_sigma", n.vad_sigma},
          {"oad_sigma", n.oad_sigma},
          {"distribution", distribution_name(n.distribution)}}},
        {"seed", c.synth.seed}}},
      {"threaded", c.threaded},
      {"queue_capacity", c.queue_capacity},
  };
}

RunConfig config_from_json(const json& j, RunConfig c) {
  Section top(j, "");
  if (const json* v = top.child("value")) {
    Section s(*v, "value");
    s.get("alpha", c.value.alpha);
    s.get("beta", c.value.beta);
    s.finish();
  }
  if (const json* v = top.child("dmm")) {
    Section s(*v, "dmm");
    s.get("max_len", c.dmm.max_len);
    s.get("similarity_floor", c.dmm.similarity_floor);
    s.get("value_jump", c.dmm.value_jump);
    s.finish();
  }
  if (const json* v = top.child("lbo")) {
    Section s(*v, "lbo");
    s.get("eta", c.lbo.eta);
    s.get("zeta", c.lbo.zeta);
    s.finish();
  }
  if (const json* v = top.child("compression")) {
    Section s(*v, "compression");
    s.get("a1", c.compression.a1);
    s.get("a2", c.compression.a2);
    s.get("a3", c.compression.a3);
    s.finish();
  }
  std::string text = std::string(codec_name(c.codec));
  top.get("codec", text);
  c.codec = parse_codec(text);
  if (const json* v = top.child("encode")) {
    Section s(*v, "encode");
    s.get("min_quality", c.encode.min_quality);
    s.get("max_quality", c.encode.max_quality);
    s.get("discard_on_zero", c.encode.discard_on_zero);
    s.get("reference_bytes", c.encode.reference_bytes);
    s.finish();
  }
  top.get("lambda", c.lambda);
  top.get("sigma", c.sigma);
  get_array(top, "thresholds", c.thresholds);
  ClassScores likelihoods = c.classes.likelihoods;
  get_array(top, "likelihoods", likelihoods);
  try {
    c.classes = ClassModel::from_likelihoods(likelihoods);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config likelihoods: ") + e.what());
  }
  if (const json* v = top.child("capacity")) {
    if (v->is_null()) {
      c.capacity = BufferStore::kUnlimited;
    } else if (v->is_number()) {
      c.capacity = v->get<double>();
    } else {
      throw InputError("config capacity: expected a number or null");
    }
  }
  text = std::string(policy_name(c.policy));
  top.get("policy", text);
  try {
    c.policy = parse_policy(text);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config policy: ") + e.what());
  }
  text = std::string(score_mode_name(c.scores));
  top.get("scores", text);
  c.scores = parse_score_mode(text);
  top.get("replay_path", c.replay_path);
  if (const json* v = top.child("synth")) {
    Section s(*v, "synth");
    s.get("frames", c.synth.frames);
    s.get("anomaly_rate", c.synth.anomaly_rate);
    get_array(s, "class_mix", c.synth.class_mix);
    s.get("clip_min", c.synth.clip_min);
    s.get("clip_max", c.synth.clip_max);
    s.get("scene_length", c.synth.scene_length);
    s.get("frame_bytes", c.synth.frame_bytes);
    s.get("size_jitter", c.synth.size_jitter);
    s.get("mean_tracks", c.synth.mean_tracks);
    s.get("track_birth_prob", c.synth.track_birth_prob);
    s.get("track_death_prob", c.synth.track_death_prob);
    if (const json* nv = s.child("noise")) {
      Section ns(*nv, "synth.noise");
      ns.get("vad_sigma", c.synth.noise.vad_sigma);
      ns.get("oad_sigma", c.synth.noise.oad_sigma);
      text = std::string(distribution_name(c.synth.noise.distribution));
      ns.get("distribution", text);
      c.synth.noise.distribution = parse_distribution(text);
      ns.finish();
    }
    s.get("seed", c.synth.seed);
    s.finish();
  }
  top.get("threaded", c.threaded);
  top.get("queue_capacity", c.queue_capacity);
  top.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError(path.string() + ": not valid JSON");
  return config_from_json(j, std::move(base));
}

}  // namespace edr
