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

#include "edr/value.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace edr {
namespace {

double neg_log2(double p) { return -std::log2(p); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void ValueParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("value weights alpha and beta must lie in [0,1]");
  }
}

std::vector<double> info_measures(std::span<const double> anomaly_likelihoods) {
  if (anomaly_likelihoods.empty()) {
    throw std::invalid_argument("info_measures needs at least one likelihood");
  }
  std::vector<double> w;
  w.reserve(anomaly_likelihoods.size());
  for (double p : anomaly_likelihoods) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("anomaly-class likelihood must lie in (0,1), got " +
                                  std::to_string(p));
    }
    w.push_back(neg_log2(p));
  }
  const double max_w = *std::max_element(w.begin(), w.end());
  for (double& x : w) x /= max_w;
  return w;
}

ClassScores info_measures(const ClassScores& likelihoods) {
  auto anomaly = std::span<const double>(likelihoods).subspan(1);
  std::vector<double> w = info_measures(anomaly);
  ClassScores out{};
  std::copy(w.begin(), w.end(), out.begin() + 1);
  return out;
}

ClassModel ClassModel::from_likelihoods(const ClassScores& likelihoods) {
  ClassModel model;
  model.likelihoods = likelihoods;
  model.likelihoods[0] = 1.0;
  model.info_measures = edr::info_measures(model.likelihoods);
  return model;
}

ClassModel ClassModel::dota() {
  // ST AH LA OC TC VP VO OO, then the non-ego variants.
  ClassScores p = {1.0,
                   0.011, 0.057, 0.054, 0.023, 0.163, 0.012, 0.010, 0.089,
                   0.010, 0.091, 0.104, 0.081, 0.207, 0.010, 0.011, 0.070};
  return from_likelihoods(p);
}

double hybrid_value(double anomaly_score, const ClassScores& class_scores,
                    const ValueParams& params, const ClassScores& info) {
  double expected_info = 0.0;
  for (std::size_t i = 1; i < kNumClasses; ++i) expected_info += info[i] * class_scores[i];
  return clamp01(params.alpha * anomaly_score + params.beta * expected_info);
}

std::vector<double> legacy_event_values(std::span<const double> likelihoods) {
  std::vector<double> v;
  v.reserve(likelihoods.size());
  for (double p : likelihoods) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::invalid_argument("event likelihood must lie in (0,1], got " + std::to_string(p));
    }
    v.push_back(p == 1.0 ? 0.0 : neg_log2(p));
  }
  const double max_v = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  if (max_v > 0.0) {
    for (double& x : v) x /= max_v;
  }
  return v;
}

double legacy_event_value(EventClass event, const ClassScores& likelihoods) {
  return legacy_event_values(likelihoods)[class_index(event)];
}

void DetectorNoise::validate() const {
  if (!(vad_sigma >= 0.0) || !(oad_sigma >= 0.0)) {
    throw std::invalid_argument("detector noise levels must be nonnegative");
  }
}

Scores ground_truth_scores(EventClass gt) {
  return Scores{is_anomaly(gt) ? 1.0 : 0.0, one_hot(gt)};
}

ReplayScoreProvider::ReplayScoreProvider(Cursor cursor) : cursor_(std::move(cursor)) {}

ReplayScoreProvider::ReplayScoreProvider(std::vector<TraceRecord> records)
    : cursor_([records = std::move(records), pos = std::size_t{0}]() mutable
                  -> std::optional<TraceRecord> {
        if (pos == records.size()) return std::nullopt;
        return records[pos++];
      }) {}

Scores ReplayScoreProvider::next(std::uint64_t frame_id, std::optional<EventClass>) {
  std::optional<TraceRecord> rec = cursor_();
  if (!rec) {
    throw InputError("score trace ends before frame " + std::to_string(frame_id));
  }
  if (rec->frame_id != frame_id) {
    throw InputError("score trace gap: expected frame " + std::to_string(frame_id) +
                     ", trace has frame " + std::to_string(rec->frame_id));
  }
  return Scores{clamp01(rec->anomaly_score), normalize_class_scores(rec->class_scores)};
}

Scores GroundTruthScoreProvider::next(std::uint64_t frame_id, std::optional<EventClass> gt) {
  if (!gt) {
    throw InputError("ground-truth scores need a label for frame " + std::to_string(frame_id));
  }
  return ground_truth_scores(*gt);
}

SyntheticScoreProvider::SyntheticScoreProvider(DetectorNoise noise, std::uint64_t seed)
    : noise_(noise), rng_(seed) {
  noise_.validate();
}

double SyntheticScoreProvider::draw(double sigma) {
  if (sigma == 0.0) return 0.0;
  if (noise_.distribution == NoiseDistribution::kUniform) {
    return std::uniform_real_distribution<double>(-sigma, sigma)(rng_);
  }
  return std::normal_distribution<double>(0.0, sigma)(rng_);
}

Scores SyntheticScoreProvider::next(std::uint64_t frame_id, std::optional<EventClass> gt) {
  if (!gt) {
    throw InputError("synthetic scores need a label for frame " + std::to_string(frame_id));
  }
  Scores out;
  const double vad = std::abs(draw(noise_.vad_sigma));
  out.anomaly_score = is_anomaly(*gt) ? clamp01(1.0 - vad) : clamp01(vad);

  // The class-confidence perturbation has total magnitude oad_sigma spread
  // over all classes, so each entry gets sigma / sqrt(17).
  const double per_class = noise_.oad_sigma / std::sqrt(static_cast<double>(kNumClasses));
  ClassScores raw = one_hot(*gt);
  for (double& o : raw) o = std::max(0.0, o + draw(per_class));
  if (std::all_of(raw.begin(), raw.end(), [](double o) { return o == 0.0; })) {
    raw = one_hot(*gt);
  }
  out.class_scores = normalize_class_scores(raw);
  return out;
}

}  // namespace edr
