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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edr {

inline constexpr std::size_t kNumClasses = 17;
inline constexpr std::size_t kNumAnomalyClasses = kNumClasses - 1;

// Per-class vector in EventClass id order: N, then the eight ego categories,
// then the eight non-ego categories.
using ClassScores = std::array<double, kNumClasses>;

// Raised when an input file or stream violates its declared schema.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventClass : std::uint8_t {
  kNormal = 0,
  kST, kAH, kLA, kOC, kTC, kVP, kVO, kOO,
  kSTx, kAHx, kLAx, kOCx, kTCx, kVPx, kVOx, kOOx,
};

constexpr std::size_t class_index(EventClass c) {
  return static_cast<std::size_t>(c);
}

// Throws std::out_of_range for ids outside 0..16.
EventClass event_class_from_id(int id);

// "N", "OC", "OC*" and so on.
std::string_view class_name(EventClass c);
std::optional<EventClass> parse_event_class(std::string_view name);

constexpr bool is_anomaly(EventClass c) { return c != EventClass::kNormal; }
constexpr bool is_ego(EventClass c) {
  return class_index(c) >= 1 && class_index(c) <= 8;
}

struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t byte_size() const {
    return static_cast<std::size_t>(width) * height * channels;
  }
  bool operator==(const Image&) const = default;
};

struct ObjectObservation {
  std::int64_t track_id = 0;
  std::string object_class;
  std::array<double, 4> bbox{};  // normalized x1, y1, x2, y2
  double confidence = 0.0;

  // Throws std::invalid_argument when the box or confidence is malformed.
  void validate() const;
  bool operator==(const ObjectObservation&) const = default;
};

struct FrameRecord {
  std::uint64_t frame_id = 0;
  std::optional<Image> image;
  double raw_cost = 0.0;
  double anomaly_score = 0.0;
  ClassScores class_scores{};
  double value = 0.0;
  std::vector<ObjectObservation> objects;
  std::optional<EventClass> gt_class;

  // Rejects records whose scores, costs, or objects are out of range.
  void validate() const;
  bool operator==(const FrameRecord&) const = default;
};

// One line of a score trace: what a detector emitted for one frame, plus
// optional labels and object observations.
struct TraceRecord {
  std::uint64_t frame_id = 0;
  double anomaly_score = 0.0;
  ClassScores class_scores{};
  std::optional<EventClass> gt_class;
  std::optional<std::vector<ObjectObservation>> objects;

  bool operator==(const TraceRecord&) const = default;
};

// Class likelihoods and the information measures derived from them.
struct ClassModel {
  ClassScores likelihoods{};
  ClassScores info_measures{};

  // Builds the model from a likelihood vector; index 0 (normal) is forced to
  // P = 1 so that its information measure is zero.
  static ClassModel from_likelihoods(const ClassScores& likelihoods);

  // Anomaly-class likelihoods of the DoTA traffic-anomaly dataset.
  static ClassModel dota();

  bool operator==(const ClassModel&) const = default;
};

// Scales a nonnegative score vector to sum to one. Throws
// std::invalid_argument on negative entries or an all-zero vector.
ClassScores normalize_class_scores(std::span<const double, kNumClasses> raw);

// min(raw_bytes / reference_max_bytes, 1).
double normalize_cost(std::uint64_t raw_bytes, std::uint64_t reference_max_bytes);

ClassScores one_hot(EventClass c);

// Index of the largest entry; the first one wins ties.
EventClass top_class(const ClassScores& scores);

}  // namespace edr
