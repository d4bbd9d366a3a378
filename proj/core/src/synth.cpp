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

#include "edr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace edr {
namespace {

constexpr std::array<const char*, 6> kObjectClasses = {"car",        "truck",   "bus",
                                                       "pedestrian", "cyclist", "motorcycle"};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct Track {
  std::int64_t id;
  std::string object_class;
  double cx, cy, w, h;
};

// Generates object tracks for consecutive frames; a new scene replaces all
// tracks with fresh ids.
class TrackSimulator {
 public:
  TrackSimulator(const SynthConfig& config, std::mt19937_64 rng)
      : config_(config), rng_(std::move(rng)) {}

  void new_scene() {
    tracks_.clear();
    const double extra = std::max(0.0, config_.mean_tracks - 1.0);
    const int initial = 1 + (extra > 0.0 ? std::poisson_distribution<int>(extra)(rng_) : 0);
    for (int i = 0; i < initial; ++i) spawn();
  }

  std::vector<ObjectObservation> step() {
    std::bernoulli_distribution dies(config_.track_death_prob);
    std::erase_if(tracks_, [&](const Track&) { return dies(rng_); });
    if (std::bernoulli_distribution(config_.track_birth_prob)(rng_)) spawn();

    std::normal_distribution<double> jitter(0.0, 0.005);
    std::uniform_real_distribution<double> conf(0.5, 1.0);
    std::vector<ObjectObservation> out;
    out.reserve(tracks_.size());
    for (Track& t : tracks_) {
      t.cx = std::clamp(t.cx + jitter(rng_), 0.0, 1.0);
      t.cy = std::clamp(t.cy + jitter(rng_), 0.0, 1.0);
      ObjectObservation obs;
      obs.track_id = t.id;
      obs.object_class = t.object_class;
      obs.bbox = {std::clamp(t.cx - t.w / 2, 0.0, 1.0), std::clamp(t.cy - t.h / 2, 0.0, 1.0),
                  std::clamp(t.cx + t.w / 2, 0.0, 1.0), std::clamp(t.cy + t.h / 2, 0.0, 1.0)};
      obs.confidence = conf(rng_);
      out.push_back(std::move(obs));
    }
    return out;
  }

 private:
  void spawn() {
    std::uniform_real_distribution<double> pos(0.1, 0.9);
    std::uniform_real_distribution<double> size(0.05, 0.3);
    std::uniform_int_distribution<std::size_t> cls(0, kObjectClasses.size() - 1);
    tracks_.push_back(Track{next_id_++, kObjectClasses[cls(rng_)], pos(rng_), pos(rng_),
                            size(rng_), size(rng_)});
  }

  const SynthConfig& config_;
  std::mt19937_64 rng_;
  std::vector<Track> tracks_;
  std::int64_t next_id_ = 1;
};

}  // namespace

void SynthConfig::validate() const {
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0)) {
    throw std::invalid_argument("anomaly rate must lie in [0,1]");
  }
  double mix_sum = 0.0;
  for (double m : class_mix) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument("class mix weights must be finite and nonnegative");
    }
    mix_sum += m;
  }
  if (anomaly_rate > 0.0 && mix_sum <= 0.0) {
    throw std::invalid_argument("empty class mix with a nonzero anomaly rate");
  }
  if (clip_min == 0 || clip_max < clip_min) throw std::invalid_argument("bad clip length range");
  if (scene_length == 0) throw std::invalid_argument("scene length must be positive");
  if (frame_bytes == 0) throw std::invalid_argument("frame byte count must be positive");
  if (!(size_jitter >= 0.0)) throw std::invalid_argument("size jitter must be nonnegative");
  if (!(mean_tracks >= 0.0)) throw std::invalid_argument("mean track count must be nonnegative");
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(track_birth_prob) || !is_prob(track_death_prob)) {
    throw std::invalid_argument("track birth/death probabilities must lie in [0,1]");
  }
  noise.validate();
}

std::uint64_t SyntheticStream::anomalous_frames() const {
  return static_cast<std::uint64_t>(std::count_if(
      frames.begin(), frames.end(), [](const FrameMeta& f) { return is_anomaly(f.gt_class); }));
}

std::uint64_t score_seed(std::uint64_t seed) { return make_rng(seed, 4)(); }

SyntheticStream synthesize_trace(const SynthConfig& config) {
  config.validate();
  SyntheticStream out;
  out.config = config;

  std::mt19937_64 layout_rng = make_rng(config.seed, 1);
  std::mt19937_64 size_rng = make_rng(config.seed, 2);
  TrackSimulator tracks(config, make_rng(config.seed, 3));

  // Anomaly clips sized so the labeled count hits the target exactly.
  const auto target = static_cast<std::uint64_t>(
      std::llround(config.anomaly_rate * static_cast<double>(config.frames)));
  std::discrete_distribution<int> mix(config.class_mix.begin(), config.class_mix.end());
  std::uniform_int_distribution<std::uint64_t> clip_len(config.clip_min, config.clip_max);
  struct Clip {
    std::uint64_t length;
    EventClass cls;
    std::uint64_t position;  // number of normal frames preceding the clip
  };
  std::vector<Clip> clips;
  for (std::uint64_t total = 0; total < target;) {
    const std::uint64_t len = std::min(clip_len(layout_rng), target - total);
    clips.push_back(Clip{len, event_class_from_id(1 + mix(layout_rng)), 0});
    total += len;
  }
  const std::uint64_t normal_frames = config.frames - target;
  std::uniform_int_distribution<std::uint64_t> where(0, normal_frames);
  for (Clip& c : clips) c.position = where(layout_rng);
  std::stable_sort(clips.begin(), clips.end(),
                   [](const Clip& a, const Clip& b) { return a.position < b.position; });

  std::normal_distribution<double> size_noise(0.0, 1.0);
  auto frame_bytes = [&]() -> std::uint64_t {
    if (config.size_jitter == 0.0) return config.frame_bytes;
    const double b = static_cast<double>(config.frame_bytes) *
                     (1.0 + config.size_jitter * size_noise(size_rng));
    return static_cast<std::uint64_t>(std::max<long long>(1, std::llround(b)));
  };

  out.frames.reserve(config.frames);
  std::uint64_t frame_id = 0;
  auto emit = [&](EventClass cls) {
    out.frames.push_back(FrameMeta{frame_id++, frame_bytes(), cls, tracks.step()});
  };

  std::uint64_t normal_emitted = 0;
  std::uint64_t scene_pos = 0;
  bool scene_open = false;
  auto next_clip = clips.begin();
  while (normal_emitted < normal_frames || next_clip != clips.end()) {
    if (next_clip != clips.end() && next_clip->position == normal_emitted) {
      tracks.new_scene();
      for (std::uint64_t i = 0; i < next_clip->length; ++i) emit(next_clip->cls);
      ++next_clip;
      scene_open = false;  // normal driving resumes in a new scene
      continue;
    }
    if (!scene_open || scene_pos == config.scene_length) {
      tracks.new_scene();
      scene_open = true;
      scene_pos = 0;
    }
    emit(EventClass::kNormal);
    ++scene_pos;
    ++normal_emitted;
  }

  SyntheticScoreProvider provider(config.noise, score_seed(config.seed));
  out.scores.reserve(out.frames.size());
  for (const FrameMeta& f : out.frames) {
    Scores s = provider.next(f.frame_id, f.gt_class);
    out.scores.push_back(TraceRecord{f.frame_id, s.anomaly_score, s.class_scores, f.gt_class,
                                     std::nullopt});
  }
  return out;
}

}  // namespace edr
