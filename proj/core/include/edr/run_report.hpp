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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edr/core.hpp"

namespace edr {

struct FrameLedgerEntry {
  std::uint64_t frame_id = 0;
  std::optional<EventClass> gt_class;
  double anomaly_score = 0.0;
  EventClass top_class = EventClass::kNormal;  // argmax of the class scores
  double top_score = 0.0;
  double value = 0.0;
  double smoothed_value = 0.0;
  double decision = 0.0;
  double raw_cost = 0.0;
  double stored_cost = 0.0;
  std::uint64_t buffer = 0;

  bool operator==(const FrameLedgerEntry&) const = default;
};

enum class BufferFate { kStored, kEvicted, kRejected };

std::string_view fate_name(BufferFate f);

struct BufferLedgerEntry {
  std::uint64_t index = 0;
  std::uint64_t first_frame = 0;
  std::uint64_t frame_count = 0;
  double value = 0.0;
  double cost = 0.0;
  std::vector<EventClass> detected_classes;
  double anomaly_max = 0.0;
  BufferFate fate = BufferFate::kStored;

  bool operator==(const BufferLedgerEntry&) const = default;
};

// Mean, median and population standard deviation. The median of an even
// count averages the two central values. All zero for an empty sample.
struct DecisionStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;

  bool operator==(const DecisionStats&) const = default;
};

DecisionStats describe(std::span<const double> sample);

struct GroupAggregate {
  std::uint64_t frames = 0;
  double raw_cost = 0.0;
  double stored_cost = 0.0;     // after compression, before retention
  std::uint64_t retained_frames = 0;
  double retained_cost = 0.0;   // in buffers still stored at end of run
  DecisionStats decisions;

  bool operator==(const GroupAggregate&) const = default;
};

struct RunAggregates {
  GroupAggregate normal;
  GroupAggregate anomaly;
  std::uint64_t unlabeled_frames = 0;
  std::array<DecisionStats, kNumClasses> decisions_by_class{};
  std::uint64_t buffers = 0;
  std::uint64_t stored_buffers = 0;
  std::uint64_t evicted_buffers = 0;
  std::uint64_t rejected_buffers = 0;
  double store_total_cost = 0.0;

  bool operator==(const RunAggregates&) const = default;
};

// Pure function of the two ledgers.
RunAggregates aggregate(std::span<const FrameLedgerEntry> frames,
                        std::span<const BufferLedgerEntry> buffers);

struct RunReport {
  std::string fingerprint;  // identifies the input stream (ids, labels, raw costs)
  nlohmann::json config;    // effective configuration of the run
  std::vector<FrameLedgerEntry> frames;
  std::vector<BufferLedgerEntry> buffers;
  RunAggregates aggregates;

  bool operator==(const RunReport&) const = default;
};

// Running fingerprint over (frame_id, label, raw cost) triples.
class StreamFingerprint {
 public:
  void add(std::uint64_t frame_id, std::optional<EventClass> gt, double raw_cost);
  std::string hex() const;

 private:
  std::uint64_t crc_ = 0;
  std::uint64_t count_ = 0;
};

nlohmann::json report_to_json(const RunReport& report);
// Throws InputError on schema violations.
RunReport report_from_json(const nlohmann::json& j);

void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

}  // namespace edr
