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

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "edr/core.hpp"
#include "edr/value.hpp"

namespace edr {

// Synthetic driving stream: long normal scenes with short anomaly clips
// interspersed at random positions, each clip carrying one anomaly class.
struct SynthConfig {
  std::uint64_t frames = 100'000;
  double anomaly_rate = 0.005;
  // Relative weights over the 16 anomaly classes (ST .. OO*).
  std::array<double, kNumAnomalyClasses> class_mix = {
      0.011, 0.057, 0.054, 0.023, 0.163, 0.012, 0.010, 0.089,
      0.010, 0.091, 0.104, 0.081, 0.207, 0.010, 0.011, 0.070};
  std::uint64_t clip_min = 30;
  std::uint64_t clip_max = 100;
  std::uint64_t scene_length = 400;

  // Encoded frame size model.
  std::uint64_t frame_bytes = 108'000;
  double size_jitter = 0.0;  // relative standard deviation

  // Object tracks per scene.
  double mean_tracks = 4.0;
  double track_birth_prob = 0.05;
  double track_death_prob = 0.02;

  DetectorNoise noise;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

struct FrameMeta {
  std::uint64_t frame_id = 0;
  std::uint64_t raw_bytes = 0;
  EventClass gt_class = EventClass::kNormal;
  std::vector<ObjectObservation> objects;

  bool operator==(const FrameMeta&) const = default;
};

struct SyntheticStream {
  SynthConfig config;
  std::vector<FrameMeta> frames;     // sizes, labels, objects
  std::vector<TraceRecord> scores;   // noisy detector outputs, one per frame

  std::uint64_t anomalous_frames() const;
};

// Deterministic for a fixed config (including seed).
SyntheticStream synthesize_trace(const SynthConfig& config);

// Seed used by the synthetic score provider for a given run seed, so that
// in-process runs and written score traces agree.
std::uint64_t score_seed(std::uint64_t seed);

}  // namespace edr
