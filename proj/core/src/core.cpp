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

#include "edr/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edr {
namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "N",   "ST",  "AH",  "LA",  "OC",  "TC",  "VP",  "VO",  "OO",
    "ST*", "AH*", "LA*", "OC*", "TC*", "VP*", "VO*", "OO*",
};

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

EventClass event_class_from_id(int id) {
  if (id < 0 || id >= static_cast<int>(kNumClasses)) {
    throw std::out_of_range("event class id out of range: " + std::to_string(id));
  }
  return static_cast<EventClass>(id);
}

std::string_view class_name(EventClass c) { return kClassNames.at(class_index(c)); }

std::optional<EventClass> parse_event_class(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<EventClass>(i);
  }
  return std::nullopt;
}

void ObjectObservation::validate() const {
  for (double b : bbox) {
    if (!in_unit(b)) throw std::invalid_argument("bbox coordinate outside [0,1]");
  }
  if (bbox[0] > bbox[2] || bbox[1] > bbox[3]) {
    throw std::invalid_argument("bbox corners out of order for track " +
                                std::to_string(track_id));
  }
  if (!in_unit(confidence)) throw std::invalid_argument("confidence outside [0,1]");
}

void FrameRecord::validate() const {
  auto fail = [this](const char* what) {
    throw std::invalid_argument("frame " + std::to_string(frame_id) + ": " + what);
  };
  if (!in_unit(raw_cost)) fail("raw cost outside [0,1]");
  if (!in_unit(anomaly_score)) fail("anomaly score outside [0,1]");
  if (!in_unit(value)) fail("value outside [0,1]");
  double sum = 0.0;
  for (double o : class_scores) {
    if (!in_unit(o)) fail("class score outside [0,1]");
    sum += o;
  }
  if (std::abs(sum - 1.0) > 1e-6) fail("class scores do not sum to 1");
  for (const auto& obj : objects) obj.validate();
}

ClassScores normalize_class_scores(std::span<const double, kNumClasses> raw) {
  double sum = 0.0;
  for (double x : raw) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("class scores must be finite and nonnegative");
    }
    sum += x;
  }
  if (sum <= 0.0) throw std::invalid_argument("degenerate class score vector (all zero)");
  ClassScores out{};
  std::transform(raw.begin(), raw.end(), out.begin(), [sum](double x) { return x / sum; });
  return out;
}

double normalize_cost(std::uint64_t raw_bytes, std::uint64_t reference_max_bytes) {
  if (reference_max_bytes == 0) {
    throw std::invalid_argument("reference_max_bytes must be positive");
  }
  return std::min(static_cast<double>(raw_bytes) / static_cast<double>(reference_max_bytes), 1.0);
}

ClassScores one_hot(EventClass c) {
  ClassScores out{};
  out[class_index(c)] = 1.0;
  return out;
}

EventClass top_class(const ClassScores& scores) {
  auto it = std::max_element(scores.begin(), scores.end());
  return static_cast<EventClass>(std::distance(scores.begin(), it));
}

}  // namespace edr
