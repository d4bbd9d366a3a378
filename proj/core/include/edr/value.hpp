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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "edr/core.hpp"

namespace edr {

// Weights of the anomaly score (alpha) and the class-confidence term (beta).
struct ValueParams {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
  bool operator==(const ValueParams&) const = default;
};

// -log2(P_i) normalized by the largest one. Every likelihood must lie in
// (0,1). The result has the same length as the input and its max is 1.
std::vector<double> info_measures(std::span<const double> anomaly_likelihoods);

// Same, over a full class vector: entries 1..16 are the anomaly classes and
// w_0 is always 0.
ClassScores info_measures(const ClassScores& likelihoods);

// min(1, alpha * s + beta * sum_{i>=1} w_i * o_i).
double hybrid_value(double anomaly_score, const ClassScores& class_scores,
                    const ValueParams& params, const ClassScores& info);

// Rule-based event values: -log2(P) normalized so that the largest is 1.
// Likelihoods must lie in (0,1]; a certain event (P = 1) is worth 0.
std::vector<double> legacy_event_values(std::span<const double> likelihoods);
double legacy_event_value(EventClass event, const ClassScores& likelihoods);

struct Scores {
  double anomaly_score = 0.0;
  ClassScores class_scores{};

  bool operator==(const Scores&) const = default;
};

enum class ScoreMode { kReplay, kGroundTruth, kSynthetic };

enum class NoiseDistribution { kGaussian, kUniform };

// Detector degradation used by the synthetic provider. Gaussian noise has
// standard deviation sigma; uniform noise is drawn from [-sigma, sigma].
struct DetectorNoise {
  double vad_sigma = 0.3;
  double oad_sigma = 0.3;
  NoiseDistribution distribution = NoiseDistribution::kGaussian;

  void validate() const;
  bool operator==(const DetectorNoise&) const = default;
};

// Supplies per-frame detector outputs in frame order.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual ScoreMode mode() const = 0;
  // gt is the frame's ground-truth label when one is known.
  virtual Scores next(std::uint64_t frame_id, std::optional<EventClass> gt) = 0;
};

// Replays recorded detector outputs. Each call must ask for the frame id of
// the next recorded line.
class ReplayScoreProvider final : public ScoreProvider {
 public:
  using Cursor = std::function<std::optional<TraceRecord>()>;

  explicit ReplayScoreProvider(Cursor cursor);
  explicit ReplayScoreProvider(std::vector<TraceRecord> records);

  ScoreMode mode() const override { return ScoreMode::kReplay; }
  Scores next(std::uint64_t frame_id, std::optional<EventClass> gt) override;

 private:
  Cursor cursor_;
};

// Uses labels as perfect detector outputs: anomalies score s = 1 with a
// one-hot class vector, normal frames s = 0 with one-hot N.
class GroundTruthScoreProvider final : public ScoreProvider {
 public:
  ScoreMode mode() const override { return ScoreMode::kGroundTruth; }
  Scores next(std::uint64_t frame_id, std::optional<EventClass> gt) override;
};

// Ground truth degraded by seeded noise. With zero noise it reproduces
// GroundTruthScoreProvider exactly.
class SyntheticScoreProvider final : public ScoreProvider {
 public:
  SyntheticScoreProvider(DetectorNoise noise, std::uint64_t seed);

  ScoreMode mode() const override { return ScoreMode::kSynthetic; }
  Scores next(std::uint64_t frame_id, std::optional<EventClass> gt) override;

 private:
  double draw(double sigma);

  DetectorNoise noise_;
  std::mt19937_64 rng_;
};

Scores ground_truth_scores(EventClass gt);

}  // namespace edr
