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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "edr/buffering.hpp"
#include "edr/core.hpp"

namespace edr::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("edr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Small hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  EventClass event() { return event_class_from_id(static_cast<int>(integer(0, 16))); }

  ClassScores class_scores() {
    ClassScores raw{};
    for (double& x : raw) x = coin(0.3) ? uniform() : 0.0;
    raw[static_cast<std::size_t>(integer(0, 16))] += 0.1;
    return normalize_class_scores(raw);
  }

  ObjectObservation object(std::int64_t track) {
    ObjectObservation o;
    o.track_id = track;
    o.object_class = coin() ? "car" : "pedestrian";
    const double x = uniform(0.0, 0.5), y = uniform(0.0, 0.5);
    o.bbox = {x, y, x + uniform(0.0, 0.5), y + uniform(0.0, 0.5)};
    o.confidence = uniform();
    return o;
  }

  FrameRecord frame(std::uint64_t id) {
    FrameRecord f;
    f.frame_id = id;
    f.raw_cost = uniform();
    f.anomaly_score = uniform();
    f.class_scores = class_scores();
    f.value = uniform();
    const auto n = integer(0, 3);
    for (std::int64_t i = 0; i < n; ++i) f.objects.push_back(object(integer(1, 6)));
    if (coin(0.8)) f.gt_class = event();
    return f;
  }

  // A finalized buffer with the given index, value and cost.
  FrameBuffer buffer(std::uint64_t index, double value, double cost) {
    FrameBuffer b;
    b.index = index;
    const auto n = integer(1, 4);
    for (std::int64_t i = 0; i < n; ++i) {
      b.frames.push_back(frame(index * 10 + static_cast<std::uint64_t>(i)));
      b.smoothed_values.push_back(b.frames.back().value);
      b.decisions.push_back(uniform());
      b.stored_costs.push_back(cost / static_cast<double>(n));
    }
    b.tags = make_tags(b.frames, default_class_thresholds());
    b.value = value;
    b.cost = cost;
    return b;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace edr::test
