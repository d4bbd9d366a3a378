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

#include "edr/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace edr {

using nlohmann::ordered_json;

namespace {

// a / b with 0/0 = 0 and x/0 = inf.
double ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return a / b;
}

GroupStats group(const char* label, const GroupAggregate& g) {
  return GroupStats{label, g.frames, g.raw_cost, g.stored_cost, g.decisions};
}

std::string strategy_better(const RetentionCounts& p, const RetentionCounts& f) {
  if (p.anomaly != f.anomaly) return p.anomaly > f.anomaly ? "priority" : "fifo";
  if (p.anomaly_share != f.anomaly_share) {
    return p.anomaly_share > f.anomaly_share ? "priority" : "fifo";
  }
  return "tie";
}

void add_stats(ordered_json& row, const DecisionStats& s) {
  row["d_count"] = s.count;
  row["d_mean"] = s.mean;
  row["d_median"] = s.median;
  row["d_std"] = s.stddev;
}

void add_counts(ordered_json& row, const char* prefix, const RetentionCounts& c) {
  const std::string p(prefix);
  row[p + "_normal"] = c.normal;
  row[p + "_anomaly"] = c.anomaly;
  row[p + "_anomaly_share"] = c.anomaly_share;
  row[p + "_anomaly_to_normal"] = c.anomaly_to_normal;
}

std::string csv_cell(const ordered_json& v) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  return v.dump();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

CompressionReport compression_report(const RunReport& run) {
  const RunAggregates& a = run.aggregates;
  if (a.unlabeled_frames > 0) {
    throw InputError("compression report needs ground-truth labels; " +
                     std::to_string(a.unlabeled_frames) + " frames have none");
  }
  CompressionReport r;
  r.normal = group("normal", a.normal);
  r.anomaly = group("anomaly", a.anomaly);
  r.raw_ratio = ratio(r.anomaly.raw_cost, r.normal.raw_cost);
  r.stored_ratio = ratio(r.anomaly.stored_cost, r.normal.stored_cost);
  r.ratio_increase = r.raw_ratio > 0.0 ? r.stored_ratio / r.raw_ratio - 1.0 : 0.0;
  return r;
}

RetentionCounts retention_counts(const RunReport& run) {
  RetentionCounts c;
  c.normal = run.aggregates.normal.retained_frames;
  c.anomaly = run.aggregates.anomaly.retained_frames;
  c.anomaly_share = ratio(static_cast<double>(c.anomaly), static_cast<double>(c.normal + c.anomaly));
  c.anomaly_to_normal = ratio(static_cast<double>(c.anomaly), static_cast<double>(c.normal));
  return c;
}

std::vector<RetentionRow> retention_report(std::span<const RunReport> priority_runs,
                                           std::span<const RunReport> fifo_runs,
                                           std::span<const double> limits) {
  if (priority_runs.size() != limits.size() || fifo_runs.size() != limits.size()) {
    throw std::invalid_argument("retention report needs one run per policy and limit");
  }
  std::vector<RetentionRow> rows;
  for (std::size_t i = 0; i < limits.size(); ++i) {
    const std::string& want = priority_runs.front().fingerprint;
    if (priority_runs[i].fingerprint != want || fifo_runs[i].fingerprint != want) {
      throw InputError("retention report: runs come from different input streams");
    }
    RetentionRow row;
    row.limit = limits[i];
    row.priority = retention_counts(priority_runs[i]);
    row.fifo = retention_counts(fifo_runs[i]);
    row.better = strategy_better(row.priority, row.fifo);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<DecisionHistogram> per_class_histograms(const RunReport& run, int bins) {
  if (bins < 1) throw std::invalid_argument("histograms need at least one bin");
  std::vector<DecisionHistogram> out;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    out.push_back(DecisionHistogram{static_cast<EventClass>(c),
                                    std::vector<std::uint64_t>(static_cast<std::size_t>(bins))});
  }
  for (const auto& f : run.frames) {
    if (!f.gt_class || !is_anomaly(*f.gt_class)) continue;
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(bins - 1),
                                           static_cast<std::size_t>(f.decision * bins));
    ++out[class_index(*f.gt_class) - 1].counts[bin];
  }
  return out;
}

ValueGrid default_value_grid() {
  return {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {0.9, 0.1}, {0.5, 0.5}, {0.1, 0.9}};
}

std::vector<SweepRow> value_method_sweep(const RunConfig& base, const ValueGrid& grid,
                                         const RunFunction& run) {
  if (grid.empty()) throw std::invalid_argument("value sweep needs a nonempty grid");
  std::vector<SweepRow> rows;
  for (const auto& [alpha, beta] : grid) {
    RunConfig config = base;
    config.value.alpha = alpha;
    config.value.beta = beta;
    rows.push_back(SweepRow{alpha, beta, compression_report(run(config))});
  }
  return rows;
}

ordered_json compression_table(const CompressionReport& r) {
  ordered_json rows = ordered_json::array();
  for (const GroupStats* g : {&r.normal, &r.anomaly}) {
    ordered_json row;
    row["group"] = g->label;
    row["frames"] = g->frames;
    row["raw_cost"] = g->raw_cost;
    row["stored_cost"] = g->stored_cost;
    add_stats(row, g->decisions);
    row["raw_ratio"] = r.raw_ratio;
    row["stored_ratio"] = r.stored_ratio;
    row["ratio_increase"] = r.ratio_increase;
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json class_decision_table(const RunReport& run) {
  ordered_json rows = ordered_json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ordered_json row;
    row["class"] = class_name(static_cast<EventClass>(c));
    add_stats(row, run.aggregates.decisions_by_class[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json retention_table(std::span<const RetentionRow> rows) {
  ordered_json out = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["limit"] = r.limit;
    add_counts(row, "priority", r.priority);
    add_counts(row, "fifo", r.fifo);
    row["better"] = r.better;
    out.push_back(std::move(row));
  }
  return out;
}

ordered_json histogram_table(std::span<const DecisionHistogram> hists) {
  ordered_json out = ordered_json::array();
  for (const auto& h : hists) {
    const std::size_t bins = h.counts.size();
    for (std::size_t b = 0; b < bins; ++b) {
      ordered_json row;
      row["class"] = class_name(h.event);
      row["bin"] = b;
      row["lo"] = static_cast<double>(b) / static_cast<double>(bins);
      row["hi"] = static_cast<double>(b + 1) / static_cast<double>(bins);
      row["count"] = h.counts[b];
      out.push_back(std::move(row));
    }
  }
  return out;
}

ordered_json sweep_table(std::span<const SweepRow> rows) {
  ordered_json out = ordered_json::array();
  for (const auto& r : rows) {
    for (const GroupStats* g : {&r.stats.normal, &r.stats.anomaly}) {
      ordered_json row;
      row["alpha"] = r.alpha;
      row["beta"] = r.beta;
      row["group"] = g->label;
      row["frames"] = g->frames;
      add_stats(row, g->decisions);
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::string to_csv(const ordered_json& rows) {
  std::ostringstream out;
  if (!rows.is_array() || rows.empty()) return "";
  bool first = true;
  for (const auto& [key, _] : rows.front().items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << '\n';
  for (const auto& row : rows) {
    first = true;
    for (const auto& [_, value] : row.items()) {
      out << (first ? "" : ",") << csv_cell(value);
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

void write_table(const ordered_json& rows, const std::filesystem::path& dir,
                 const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_text(dir / (stem + ".json"), rows.dump(1) + "\n");
  write_text(dir / (stem + ".csv"), to_csv(rows));
}

}  // namespace edr
