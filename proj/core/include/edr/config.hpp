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

#include <cstddef>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "edr/buffering.hpp"
#include "edr/codec.hpp"
#include "edr/storage.hpp"
#include "edr/synth.hpp"
#include "edr/value.hpp"

namespace edr {

enum class CodecMode { kModeled, kRealPixels };

// Everything a pipeline run depends on. The synthetic stream section also
// carries the run's single seed and the synthetic detector noise.
struct RunConfig {
  ValueParams value;
  DmmParams dmm;
  LboParams lbo;
  CompressionModel compression;
  CodecMode codec = CodecMode::kModeled;
  EncodeOptions encode;
  double lambda = 1e-6;
  double sigma = 0.0;
  ClassScores thresholds = default_class_thresholds();
  ClassModel classes = ClassModel::dota();
  double capacity = BufferStore::kUnlimited;
  RetentionPolicy policy = RetentionPolicy::kPriority;
  ScoreMode scores = ScoreMode::kSynthetic;
  std::string replay_path;
  SynthConfig synth;
  bool threaded = false;
  std::size_t queue_capacity = 256;

  std::uint64_t seed() const { return synth.seed; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

std::string_view score_mode_name(ScoreMode m);

nlohmann::json config_to_json(const RunConfig& config);

// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace edr
