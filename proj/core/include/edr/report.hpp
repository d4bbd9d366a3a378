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
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "edr/config.hpp"
#include "edr/run_report.hpp"

namespace edr {

// Costs in these tables are normalized cost units (one unit = one
// uncompressed reference frame), not bytes.

struct GroupStats {
  std::string label;
  std::uint64_t frames = 0;
  double raw_cost = 0.0;
  double stored_cost = 0.0;
  DecisionStats decisions;

  bool operator==(const GroupStats&) const = default;
};

struct CompressionReport {
  GroupStats normal;
  GroupStats anomaly;
  double raw_ratio = 0.0;     // anomalous / normal raw cost
  double stored_ratio = 0.0;  // anomalous / normal stored cost
  double ratio_increase = 0.0;  // stored_ratio / raw_ratio - 1

  bool operator==(const CompressionReport&) const = default;
};

// Throws InputError when any frame lacks a ground-truth label.
CompressionReport compression_report(const RunReport& run);

struct RetentionCounts {
  std::uint64_t normal = 0;
  std::uint64_t anomaly = 0;
  double anomaly_share = 0.0;  // anomaly / (normal + anomaly)
  double anomaly_to_normal = 0.0;

  bool operator==(const RetentionCounts&) const = default;
};

RetentionCounts retention_counts(const RunReport& run);

struct RetentionRow {
  double limit = 0.0;
  RetentionCounts priority;
  RetentionCounts fifo;
  std::string better;  // "priority", "fifo" or "tie"

  bool operator==(const RetentionRow&) const = default;
};

// Row i pairs priority_runs[i] and fifo_runs[i] at limits[i]. Every run must
// come from the same input stream.
std::vector<RetentionRow> retention_report(std::span<const RunReport> priority_runs,
                                           std::span<const RunReport> fifo_runs,
                                           std::span<const double> limits);

struct DecisionHistogram {
  EventClass event = EventClass::kST;
  std::vector<std::uint64_t> counts;  // uniform bins over [0,1]; d = 1 lands in the top bin

  bool operator==(const DecisionHistogram&) const = default;
};

inline constexpr int kDefaultHistogramBins = 20;

// One histogram per anomaly class, in class order.
std::vector<DecisionHistogram> per_class_histograms(const RunReport& run,
                                                    int bins = kDefaultHistogramBins);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  CompressionReport stats;

  bool operator==(const SweepRow&) const = default;
};

using ValueGrid = std::vector<std::pair<double, double>>;

// VAD-only, OAD-only, and four hybrid weightings.
ValueGrid default_value_grid();

using RunFunction = std::function<RunReport(const RunConfig&)>;

std::vector<SweepRow> value_method_sweep(const RunConfig& base, const ValueGrid& grid,
                                         const RunFunction& run);

// Tables as ordered JSON row arrays. The CSV form is rendered from the same
// rows so the two always agree.
nlohmann::ordered_json compression_table(const CompressionReport& r);
nlohmann::ordered_json class_decision_table(const RunReport& run);
nlohmann::ordered_json retention_table(std::span<const RetentionRow> rows);
nlohmann::ordered_json histogram_table(std::span<const DecisionHistogram> hists);
nlohmann::ordered_json sweep_table(std::span<const SweepRow> rows);

std::string to_csv(const nlohmann::ordered_json& rows);

// Writes <stem>.csv and <stem>.json under dir.
void write_table(const nlohmann::ordered_json& rows, const std::filesystem::path& dir,
                 const std::string& stem);

}  // namespace edr
