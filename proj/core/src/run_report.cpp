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

#include "edr/run_report.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <zlib.h>

namespace edr {

using nlohmann::json;

namespace {

constexpr std::string_view kReportSchema = "edr.report/1";

json class_json(const std::optional<EventClass>& c) {
  return c ? json(class_name(*c)) : json(nullptr);
}

EventClass parse_class(const json& j) {
  auto c = parse_event_class(j.get<std::string>());
  if (!c) throw InputError("unknown event class '" + j.get<std::string>() + "'");
  return *c;
}

BufferFate parse_fate(const std::string& s) {
  if (s == "stored") return BufferFate::kStored;
  if (s == "evicted") return BufferFate::kEvicted;
  if (s == "rejected") return BufferFate::kRejected;
  throw InputError("unknown buffer fate '" + s + "'");
}

json stats_json(const DecisionStats& s) {
  return json{{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.stddev}};
}

json group_json(const GroupAggregate& g) {
  return json{{"frames", g.frames},
              {"raw_cost", g.raw_cost},
              {"stored_cost", g.stored_cost},
              {"retained_frames", g.retained_frames},
              {"retained_cost", g.retained_cost},
              {"d", stats_json(g.decisions)}};
}

json aggregates_json(const RunAggregates& a) {
  json by_class = json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    by_class[std::string(class_name(static_cast<EventClass>(c)))] =
        stats_json(a.decisions_by_class[c]);
  }
  return json{{"normal", group_json(a.normal)},
              {"anomaly", group_json(a.anomaly)},
              {"unlabeled_frames", a.unlabeled_frames},
              {"d_by_class", std::move(by_class)},
              {"buffers", a.buffers},
              {"stored_buffers", a.stored_buffers},
              {"evicted_buffers", a.evicted_buffers},
              {"rejected_buffers", a.rejected_buffers},
              {"store_total_cost", a.store_total_cost}};
}

}  // namespace

std::string_view fate_name(BufferFate f) {
  switch (f) {
    case BufferFate::kStored:
      return "stored";
    case BufferFate::kEvicted:
      return "evicted";
    case BufferFate::kRejected:
      break;
  }
  return "rejected";
}

DecisionStats describe(std::span<const double> sample) {
  DecisionStats s;
  s.count = sample.size();
  if (sample.empty()) return s;
  const double n = static_cast<double>(sample.size());
  double sum = 0.0;
  for (double x : sample) sum += x;
  s.mean = sum / n;
  double ss = 0.0;
  for (double x : sample) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / n);
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
  return s;
}

RunAggregates aggregate(std::span<const FrameLedgerEntry> frames,
                        std::span<const BufferLedgerEntry> buffers) {
  RunAggregates a;
  std::map<std::uint64_t, BufferFate> fate;
  for (const auto& b : buffers) {
    fate[b.index] = b.fate;
    ++a.buffers;
    switch (b.fate) {
      case BufferFate::kStored:
        ++a.stored_buffers;
        a.store_total_cost += b.cost;
        break;
      case BufferFate::kEvicted:
        ++a.evicted_buffers;
        break;
      case BufferFate::kRejected:
        ++a.rejected_buffers;
        break;
    }
  }

  std::vector<double> normal_d, anomaly_d;
  std::array<std::vector<double>, kNumClasses> by_class;
  for (const auto& f : frames) {
    if (!f.gt_class) {
      ++a.unlabeled_frames;
      continue;
    }
    const bool anomalous = is_anomaly(*f.gt_class);
    GroupAggregate& g = anomalous ? a.anomaly : a.normal;
    ++g.frames;
    g.raw_cost += f.raw_cost;
    g.stored_cost += f.stored_cost;
    auto it = fate.find(f.buffer);
    if (it != fate.end() && it->second == BufferFate::kStored) {
      ++g.retained_frames;
      g.retained_cost += f.stored_cost;
    }
    (anomalous ? anomaly_d : normal_d).push_back(f.decision);
    by_class[class_index(*f.gt_class)].push_back(f.decision);
  }
  a.normal.decisions = describe(normal_d);
  a.anomaly.decisions = describe(anomaly_d);
  for (std::size_t c = 0; c < kNumClasses; ++c) a.decisions_by_class[c] = describe(by_class[c]);
  return a;
}

void StreamFingerprint::add(std::uint64_t frame_id, std::optional<EventClass> gt,
                            double raw_cost) {
  unsigned char bytes[17];
  const auto cost_bits = std::bit_cast<std::uint64_t>(raw_cost);
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(frame_id >> (8 * i));
    bytes[8 + i] = static_cast<unsigned char>(cost_bits >> (8 * i));
  }
  bytes[16] = gt ? static_cast<unsigned char>(class_index(*gt)) : 0xff;
  crc_ = ::crc32(static_cast<uLong>(crc_), bytes, sizeof(bytes));
  ++count_;
}

std::string StreamFingerprint::hex() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%08llx-%llu", static_cast<unsigned long long>(crc_),
                static_cast<unsigned long long>(count_));
  return buf;
}

json report_to_json(const RunReport& r) {
  json frames = json::array();
  for (const auto& f : r.frames) {
    frames.push_back(json{{"frame_id", f.frame_id},
                          {"gt", class_json(f.gt_class)},
                          {"s", f.anomaly_score},
                          {"top", class_name(f.top_class)},
                          {"top_score", f.top_score},
                          {"v", f.value},
                          {"v_smooth", f.smoothed_value},
                          {"d", f.decision},
                          {"raw_cost", f.raw_cost},
                          {"stored_cost", f.stored_cost},
                          {"buffer", f.buffer}});
  }
  json buffers = json::array();
  for (const auto& b : r.buffers) {
    json classes = json::array();
    for (EventClass c : b.detected_classes) classes.push_back(class_name(c));
    buffers.push_back(json{{"k", b.index},
                           {"first_frame", b.first_frame},
                           {"frames", b.frame_count},
                           {"V", b.value},
                           {"C", b.cost},
                           {"classes", std::move(classes)},
                           {"max_s", b.anomaly_max},
                           {"fate", fate_name(b.fate)}});
  }
  return json{{"schema", kReportSchema},
              {"fingerprint", r.fingerprint},
              {"config", r.config},
              {"aggregates", aggregates_json(r.aggregates)},
              {"buffers", std::move(buffers)},
              {"frames", std::move(frames)}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  try {
    if (j.at("schema") != kReportSchema) throw InputError("unexpected report schema");
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.config = j.at("config");
    for (const auto& f : j.at("frames")) {
      FrameLedgerEntry e;
      e.frame_id = f.at("frame_id").get<std::uint64_t>();
      if (!f.at("gt").is_null()) e.gt_class = parse_class(f.at("gt"));
      e.anomaly_score = f.at("s").get<double>();
      e.top_class = parse_class(f.at("top"));
      e.top_score = f.at("top_score").get<double>();
      e.value = f.at("v").get<double>();
      e.smoothed_value = f.at("v_smooth").get<double>();
      e.decision = f.at("d").get<double>();
      e.raw_cost = f.at("raw_cost").get<double>();
      e.stored_cost = f.at("stored_cost").get<double>();
      e.buffer = f.at("buffer").get<std::uint64_t>();
      if (!r.frames.empty() && e.frame_id <= r.frames.back().frame_id) {
        throw InputError("frame ledger out of order at frame " + std::to_string(e.frame_id));
      }
      r.frames.push_back(e);
    }
    for (const auto& b : j.at("buffers")) {
      BufferLedgerEntry e;
      e.index = b.at("k").get<std::uint64_t>();
      e.first_frame = b.at("first_frame").get<std::uint64_t>();
      e.frame_count = b.at("frames").get<std::uint64_t>();
      e.value = b.at("V").get<double>();
      e.cost = b.at("C").get<double>();
      for (const auto& c : b.at("classes")) e.detected_classes.push_back(parse_class(c));
      e.anomaly_max = b.at("max_s").get<double>();
      e.fate = parse_fate(b.at("fate").get<std::string>());
      r.buffers.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run report: ") + e.what());
  }
  r.aggregates = aggregate(r.frames, r.buffers);
  if (j.contains("aggregates") && j["aggregates"] != aggregates_json(r.aggregates)) {
    throw InputError("run report aggregates disagree with its ledgers");
  }
  return r;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report_to_json(report).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

RunReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError(path.string() + ": not valid JSON");
  return report_from_json(j);
}

}  // namespace edr
