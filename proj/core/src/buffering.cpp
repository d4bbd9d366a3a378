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

#include "edr/buffering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace edr {

double similarity(std::span<const std::int64_t> frame_tracks,
                  const std::set<std::int64_t>& buffer_tracks) {
  std::set<std::int64_t> frame(frame_tracks.begin(), frame_tracks.end());
  if (frame.empty()) return 1.0;
  const auto shared = std::count_if(frame.begin(), frame.end(),
                                    [&](std::int64_t id) { return buffer_tracks.contains(id); });
  return static_cast<double>(shared) / static_cast<double>(frame.size());
}

void DmmParams::validate() const {
  if (max_len == 0) throw std::invalid_argument("buffer max length must be at least 1");
  if (!(similarity_floor >= 0.0 && similarity_floor <= 1.0)) {
    throw std::invalid_argument("similarity floor must lie in [0,1]");
  }
  if (!(value_jump >= 0.0 && value_jump <= 1.0)) {
    throw std::invalid_argument("value jump threshold must lie in [0,1]");
  }
}

DmmAction dmm_step(DmmState& state, const DmmParams& params, double value, double similarity,
                   const FrameRecord& frame) {
  DmmAction action = DmmAction::kAppend;
  if (state.mode == DmmMode::kFilling &&
      (state.length >= params.max_len || similarity < params.similarity_floor ||
       std::abs(value - state.value_mean()) > params.value_jump)) {
    action = DmmAction::kTerminateThenStart;
    state = DmmState{};
  }
  state.mode = DmmMode::kFilling;
  ++state.length;
  state.value_sum += value;
  for (const auto& obj : frame.objects) state.seen_tracks.insert(obj.track_id);
  return action;
}

std::vector<double> smooth_values(std::span<const double> values, double sigma) {
  if (values.empty()) throw std::invalid_argument("smooth_values needs a nonempty sequence");
  if (!(sigma >= 0.0)) throw std::invalid_argument("smoothing sigma must be nonnegative");
  if (sigma == 0.0) return {values.begin(), values.end()};

  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
    kernel[static_cast<std::size_t>(j + radius)] =
        std::exp(-static_cast<double>(j * j) / (2.0 * sigma * sigma));
  }

  const auto n = static_cast<std::ptrdiff_t>(values.size());
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t j = std::max(-radius, -i); j <= std::min(radius, n - 1 - i); ++j) {
      const double w = kernel[static_cast<std::size_t>(j + radius)];
      acc += w * values[static_cast<std::size_t>(i + j)];
      norm += w;
    }
    out[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

void LboParams::validate() const {
  if (!(eta >= 0.0) || !(zeta > 0.0) || !std::isfinite(ratio())) {
    throw std::invalid_argument("LBO weights need eta >= 0 and zeta > 0");
  }
}

double lbo_decide(double cost, double smoothed_value, const LboParams& params,
                  const CompressionModel& model) {
  const double reward = params.ratio() * smoothed_value;
  // Without a reward term the objective never decreases in d.
  if (reward <= 0.0) return 0.0;
  if (cost <= 0.0) return 1.0;
  // Stationary point of c * phi(d) - reward * d for the logarithmic phi.
  const double d =
      (1.0 - cost * model.a1 * model.a2 / (reward * std::numbers::ln2)) / model.a2;
  return std::clamp(d, 0.0, 1.0);
}

bool BufferTag::has_class(EventClass c) const {
  return std::find(detected_classes.begin(), detected_classes.end(), c) !=
         detected_classes.end();
}

ClassScores default_class_thresholds() {
  ClassScores rho;
  rho.fill(0.5);
  return rho;
}

BufferTag make_tags(std::span<const FrameRecord> frames, const ClassScores& thresholds) {
  BufferTag tag;
  if (frames.empty()) return tag;
  const double n = static_cast<double>(frames.size());
  double sum = 0.0;
  for (const auto& f : frames) {
    sum += f.anomaly_score;
    tag.anomaly_max = std::max(tag.anomaly_max, f.anomaly_score);
  }
  tag.anomaly_mean = sum / n;
  double ss = 0.0;
  for (const auto& f : frames) ss += (f.anomaly_score - tag.anomaly_mean) * (f.anomaly_score - tag.anomaly_mean);
  tag.anomaly_var = ss / n;

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const bool hit = std::any_of(frames.begin(), frames.end(), [&](const FrameRecord& f) {
      return f.class_scores[c] > thresholds[c];
    });
    if (hit) tag.detected_classes.push_back(static_cast<EventClass>(c));
  }

  for (const auto& f : frames) {
    for (const auto& obj : f.objects) {
      auto& summary = tag.objects[obj.track_id];
      if (summary.samples.empty()) summary.object_class = obj.object_class;
      summary.samples.push_back(ObjectSample{f.frame_id, obj.bbox, obj.confidence});
    }
  }
  return tag;
}

FrameBuffer finalize_buffer(std::vector<FrameRecord> frames, std::vector<double> decisions,
                            std::vector<double> stored_costs, std::uint64_t index,
                            double lambda, const ClassScores& thresholds,
                            std::vector<double> smoothed_values) {
  if (frames.empty()) throw std::invalid_argument("cannot finalize an empty buffer");
  if (decisions.size() != frames.size() || stored_costs.size() != frames.size()) {
    throw std::invalid_argument("decisions and costs must match the buffer's frame count");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("aging factor lambda must be nonnegative");
  if (smoothed_values.empty()) {
    smoothed_values.reserve(frames.size());
    for (const auto& f : frames) smoothed_values.push_back(f.value);
  } else if (smoothed_values.size() != frames.size()) {
    throw std::invalid_argument("smoothed values must match the buffer's frame count");
  }

  FrameBuffer buf;
  buf.index = index;
  double best = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    best = std::max(best, frames[i].value * decisions[i]);
    buf.cost += stored_costs[i];
  }
  buf.value = std::pow(1.0 + lambda, static_cast<double>(index)) * best;
  buf.tags = make_tags(frames, thresholds);
  buf.frames = std::move(frames);
  buf.decisions = std::move(decisions);
  buf.stored_costs = std::move(stored_costs);
  buf.smoothed_values = std::move(smoothed_values);
  return buf;
}

}  // namespace edr
