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

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "edr/codec.hpp"
#include "edr/core.hpp"

namespace edr {

// Fraction of the frame's track ids already seen in the buffer. A frame
// without tracks is fully similar (1.0).
double similarity(std::span<const std::int64_t> frame_tracks,
                  const std::set<std::int64_t>& buffer_tracks);

struct DmmParams {
  std::uint64_t max_len = 100;
  double similarity_floor = 0.2;
  double value_jump = 0.3;

  void validate() const;
  bool operator==(const DmmParams&) const = default;
};

enum class DmmMode { kEmpty, kFilling };
enum class DmmAction { kAppend, kTerminateThenStart };

// State of the buffering Mealy machine. mode == kEmpty iff length == 0.
struct DmmState {
  DmmMode mode = DmmMode::kEmpty;
  std::uint64_t length = 0;
  double value_sum = 0.0;
  std::set<std::int64_t> seen_tracks;

  double value_mean() const { return length == 0 ? 0.0 : value_sum / static_cast<double>(length); }
  bool operator==(const DmmState&) const = default;
};

// Advances the machine by one frame. A filling buffer terminates when it is
// full, when the frame's similarity drops below the floor, or when the value
// departs from the buffer's running mean by more than the jump threshold; the
// triggering frame then starts the next buffer.
DmmAction dmm_step(DmmState& state, const DmmParams& params, double value, double similarity,
                   const FrameRecord& frame);

// Gaussian smoothing with the kernel truncated at ceil(3 sigma) and
// renormalized where it overhangs the sequence ends. sigma == 0 is identity.
std::vector<double> smooth_values(std::span<const double> values, double sigma);

struct LboParams {
  double eta = 0.9;
  double zeta = 1.7;

  double ratio() const { return eta / zeta; }
  void validate() const;
  bool operator==(const LboParams&) const = default;
};

// argmin over d in [0,1] of c * phi(d) - (eta/zeta) * v * d, preferring the
// smaller d when the objective is flat.
double lbo_decide(double cost, double smoothed_value, const LboParams& params,
                  const CompressionModel& model);

struct ObjectSample {
  std::uint64_t frame_id = 0;
  std::array<double, 4> bbox{};
  double confidence = 0.0;

  bool operator==(const ObjectSample&) const = default;
};

struct ObjectSummary {
  std::string object_class;
  std::vector<ObjectSample> samples;

  bool operator==(const ObjectSummary&) const = default;
};

struct BufferTag {
  double anomaly_mean = 0.0;
  double anomaly_max = 0.0;
  double anomaly_var = 0.0;
  std::vector<EventClass> detected_classes;
  std::map<std::int64_t, ObjectSummary> objects;

  bool has_class(EventClass c) const;
  bool operator==(const BufferTag&) const = default;
};

struct FrameBuffer {
  std::uint64_t index = 0;  // creation order k
  std::vector<FrameRecord> frames;
  std::vector<double> smoothed_values;
  std::vector<double> decisions;
  std::vector<double> stored_costs;
  std::vector<std::vector<std::uint8_t>> payloads;  // empty in modeled mode
  BufferTag tags;
  double value = 0.0;  // V_k
  double cost = 0.0;   // C_k

  bool operator==(const FrameBuffer&) const = default;
};

// Per-class detection thresholds, 0.5 for every class by default.
ClassScores default_class_thresholds();

BufferTag make_tags(std::span<const FrameRecord> frames, const ClassScores& thresholds);

// V_k = (1 + lambda)^k * max_i(v_i * d_i), C_k = sum of stored costs, plus
// tags. smoothed_values may be empty, in which case the raw values are kept.
FrameBuffer finalize_buffer(std::vector<FrameRecord> frames, std::vector<double> decisions,
                            std::vector<double> stored_costs, std::uint64_t index,
                            double lambda, const ClassScores& thresholds,
                            std::vector<double> smoothed_values = {});

}  // namespace edr
