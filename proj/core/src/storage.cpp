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

#include "edr/storage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "edr/ingest.hpp"

namespace edr {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view policy_name(RetentionPolicy p) {
  return p == RetentionPolicy::kPriority ? "priority" : "fifo";
}

RetentionPolicy parse_policy(std::string_view name) {
  if (name == "priority") return RetentionPolicy::kPriority;
  if (name == "fifo") return RetentionPolicy::kFifo;
  throw std::invalid_argument("unknown retention policy '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tag predicates

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

TagPredicate parse_clause(std::string_view clause) {
  static constexpr std::string_view kOps[] = {">=", "<=", "!=", "==", ">", "<", "="};
  std::size_t at = std::string_view::npos;
  std::string_view op;
  for (std::size_t i = 0; i < clause.size() && at == std::string_view::npos; ++i) {
    for (auto candidate : kOps) {
      if (clause.substr(i, candidate.size()) == candidate) {
        at = i;
        op = candidate;
        break;
      }
    }
  }
  if (at == std::string_view::npos) {
    throw std::invalid_argument("predicate clause without operator: '" + std::string(clause) + "'");
  }
  const std::string key(trim(clause.substr(0, at)));
  const std::string rhs(trim(clause.substr(at + op.size())));
  const bool equality = op == "=" || op == "==";

  if (key == "class") {
    auto c = parse_event_class(rhs);
    if (!c || !(equality || op == "!=")) {
      throw std::invalid_argument("bad class clause: '" + std::string(clause) + "'");
    }
    const bool want = equality;
    return [c = *c, want](const BufferTag& t) { return t.has_class(c) == want; };
  }
  if (key == "object") {
    if (!equality) throw std::invalid_argument("object clause supports '=' only");
    return [rhs](const BufferTag& t) {
      return std::any_of(t.objects.begin(), t.objects.end(),
                         [&](const auto& kv) { return kv.second.object_class == rhs; });
    };
  }
  if (key == "track") {
    std::int64_t id = 0;
    auto [p, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), id);
    if (!equality || ec != std::errc() || p != rhs.data() + rhs.size()) {
      throw std::invalid_argument("bad track clause: '" + std::string(clause) + "'");
    }
    return [id](const BufferTag& t) { return t.objects.contains(id); };
  }

  double BufferTag::*field = nullptr;
  if (key == "mean_s") field = &BufferTag::anomaly_mean;
  else if (key == "max_s") field = &BufferTag::anomaly_max;
  else if (key == "var_s") field = &BufferTag::anomaly_var;
  else throw std::invalid_argument("unknown predicate key '" + key + "'");

  double threshold = 0.0;
  try {
    std::size_t used = 0;
    threshold = std::stod(rhs, &used);
    if (used != rhs.size()) throw std::invalid_argument(rhs);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number in clause: '" + std::string(clause) + "'");
  }
  const std::string o(op);
  return [field, threshold, o](const BufferTag& t) {
    const double x = t.*field;
    if (o == ">") return x > threshold;
    if (o == ">=") return x >= threshold;
    if (o == "<") return x < threshold;
    if (o == "<=") return x <= threshold;
    if (o == "!=") return x != threshold;
    return x == threshold;
  };
}

}  // namespace

TagPredicate parse_tag_predicate(std::string_view expr) {
  expr = trim(expr);
  if (expr.empty() || expr == "*") return [](const BufferTag&) { return true; };
  std::vector<TagPredicate> clauses;
  while (!expr.empty()) {
    const auto comma = expr.find(',');
    clauses.push_back(parse_clause(trim(expr.substr(0, comma))));
    expr = comma == std::string_view::npos ? std::string_view{} : expr.substr(comma + 1);
  }
  return [clauses = std::move(clauses)](const BufferTag& t) {
    return std::all_of(clauses.begin(), clauses.end(), [&](const TagPredicate& p) { return p(t); });
  };
}

// ---------------------------------------------------------------------------
// Store

BufferStore::BufferStore(RetentionPolicy policy, double capacity)
    : policy_(policy), capacity_(capacity) {
  if (!(capacity > 0.0)) throw std::invalid_argument("store capacity must be positive");
}

InsertResult BufferStore::insert(FrameBuffer buffer) {
  if (buffer.cost > capacity_) {
    throw std::invalid_argument("buffer " + std::to_string(buffer.index) + " (cost " +
                                std::to_string(buffer.cost) + ") exceeds store capacity " +
                                std::to_string(capacity_));
  }
  if (entries_.contains(buffer.index)) {
    throw std::invalid_argument("buffer " + std::to_string(buffer.index) + " already stored");
  }
  return policy_ == RetentionPolicy::kPriority ? insert_priority(std::move(buffer))
                                               : insert_fifo(std::move(buffer));
}

InsertResult BufferStore::insert_priority(FrameBuffer buffer) {
  InsertResult result;
  // Pop minimum-value victims until the newcomer fits. If a victim is worth at
  // least as much as the newcomer, put everything back and reject.
  std::vector<HeapKey> victims;
  double freed = 0.0;
  while (total_cost_ - freed + buffer.cost > capacity_ && !heap_.empty()) {
    const HeapKey min = heap_.front();
    if (min.value >= buffer.value) {
      for (const HeapKey& v : victims) {
        heap_.push_back(v);
        std::push_heap(heap_.begin(), heap_.end(), heap_after);
      }
      log_.push_back(EvictionRecord{buffer.index, buffer.value, buffer.cost,
                                    EvictionReason::kRejected});
      result.outcome = InsertOutcome::kRejected;
      return result;
    }
    std::pop_heap(heap_.begin(), heap_.end(), heap_after);
    heap_.pop_back();
    victims.push_back(min);
    freed += entries_.at(min.id).cost;
  }
  for (const HeapKey& v : victims) {
    drop(v.id, EvictionReason::kLowestValue);
    result.evicted.push_back(v.id);
  }
  result.outcome = victims.empty() ? InsertOutcome::kStored : InsertOutcome::kStoredAfterEvicting;
  store(std::move(buffer));
  return result;
}

InsertResult BufferStore::insert_fifo(FrameBuffer buffer) {
  InsertResult result;
  while (total_cost_ + buffer.cost > capacity_ && !arrival_.empty()) {
    const std::uint64_t oldest = arrival_.front();
    arrival_.pop_front();
    drop(oldest, EvictionReason::kOldest);
    result.evicted.push_back(oldest);
  }
  result.outcome =
      result.evicted.empty() ? InsertOutcome::kStored : InsertOutcome::kStoredAfterEvicting;
  store(std::move(buffer));
  return result;
}

void BufferStore::store(FrameBuffer buffer) {
  const std::uint64_t id = buffer.index;
  total_cost_ += buffer.cost;
  if (policy_ == RetentionPolicy::kPriority) {
    heap_.push_back(HeapKey{buffer.value, id});
    std::push_heap(heap_.begin(), heap_.end(), heap_after);
  } else {
    arrival_.push_back(id);
  }
  entries_.emplace(id, std::move(buffer));
}

void BufferStore::drop(std::uint64_t id, EvictionReason reason) {
  auto it = entries_.find(id);
  log_.push_back(EvictionRecord{id, it->second.value, it->second.cost, reason});
  total_cost_ -= it->second.cost;
  entries_.erase(it);
  if (entries_.empty()) total_cost_ = 0.0;
}

std::vector<std::uint64_t> BufferStore::query(const TagPredicate& predicate) const {
  std::vector<const FrameBuffer*> hits;
  for (const auto& [id, buf] : entries_) {
    if (predicate(buf.tags)) hits.push_back(&buf);
  }
  std::sort(hits.begin(), hits.end(), [](const FrameBuffer* a, const FrameBuffer* b) {
    return a->value > b->value || (a->value == b->value && a->index < b->index);
  });
  std::vector<std::uint64_t> ids;
  ids.reserve(hits.size());
  for (const auto* b : hits) ids.push_back(b->index);
  return ids;
}

const FrameBuffer* BufferStore::find(std::uint64_t id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::uint64_t> BufferStore::ids() const {
  std::vector<std::uint64_t> out;
  if (policy_ == RetentionPolicy::kPriority) {
    for (const auto& k : heap_) out.push_back(k.id);
  } else {
    out.assign(arrival_.begin(), arrival_.end());
  }
  return out;
}

bool BufferStore::heap_property_holds() const {
  if (policy_ == RetentionPolicy::kFifo) return true;
  for (std::size_t i = 1; i < heap_.size(); ++i) {
    if (heap_after(heap_[(i - 1) / 2], heap_[i])) return false;
  }
  return heap_.size() == entries_.size();
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr std::string_view kIndexSchema = "edr.store/1";
constexpr std::string_view kManifestSchema = "edr.buffer/1";

std::string reason_name(EvictionReason r) {
  switch (r) {
    case EvictionReason::kLowestValue: return "lowest_value";
    case EvictionReason::kOldest: return "oldest";
    case EvictionReason::kRejected: return "rejected";
  }
  return "unknown";
}

EvictionReason parse_reason(const std::string& s) {
  if (s == "lowest_value") return EvictionReason::kLowestValue;
  if (s == "oldest") return EvictionReason::kOldest;
  if (s == "rejected") return EvictionReason::kRejected;
  throw InputError("unknown eviction reason '" + s + "'");
}

std::string buffer_dir_name(std::uint64_t id) {
  char name[32];
  std::snprintf(name, sizeof(name), "buffer_%08llu", static_cast<unsigned long long>(id));
  return name;
}

std::string checksum_of(const std::string& text) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()),
                         static_cast<uInt>(text.size()));
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
  return hex;
}

json tags_to_json(const BufferTag& t) {
  json classes = json::array();
  for (auto c : t.detected_classes) classes.push_back(class_name(c));
  json objects = json::array();
  for (const auto& [id, summary] : t.objects) {
    json samples = json::array();
    for (const auto& s : summary.samples) {
      samples.push_back(json{{"frame_id", s.frame_id}, {"bbox", s.bbox}, {"conf", s.confidence}});
    }
    objects.push_back(json{{"track_id", id}, {"class", summary.object_class}, {"samples", samples}});
  }
  return json{{"anomaly_mean", t.anomaly_mean}, {"anomaly_max", t.anomaly_max},
              {"anomaly_var", t.anomaly_var},   {"classes", classes},
              {"objects", objects}};
}

BufferTag tags_from_json(const json& j) {
  BufferTag t;
  t.anomaly_mean = j.at("anomaly_mean").get<double>();
  t.anomaly_max = j.at("anomaly_max").get<double>();
  t.anomaly_var = j.at("anomaly_var").get<double>();
  for (const auto& c : j.at("classes")) {
    auto cls = parse_event_class(c.get<std::string>());
    if (!cls) throw InputError("unknown class in tags");
    t.detected_classes.push_back(*cls);
  }
  for (const auto& o : j.at("objects")) {
    ObjectSummary summary;
    summary.object_class = o.at("class").get<std::string>();
    for (const auto& s : o.at("samples")) {
      ObjectSample sample;
      sample.frame_id = s.at("frame_id").get<std::uint64_t>();
      sample.bbox = s.at("bbox").get<std::array<double, 4>>();
      sample.confidence = s.at("conf").get<double>();
      summary.samples.push_back(sample);
    }
    t.objects.emplace(o.at("track_id").get<std::int64_t>(), std::move(summary));
  }
  return t;
}

json manifest_body(const FrameBuffer& buf) {
  json frames = json::array();
  for (std::size_t i = 0; i < buf.frames.size(); ++i) {
    const FrameRecord& f = buf.frames[i];
    json jf{{"frame_id", f.frame_id},
            {"raw_cost", f.raw_cost},
            {"s", f.anomaly_score},
            {"o", f.class_scores},
            {"v", f.value},
            {"v_smoothed", buf.smoothed_values[i]},
            {"d", buf.decisions[i]},
            {"stored_cost", buf.stored_costs[i]},
            {"objects", objects_to_json(f.objects)}};
    jf["gt"] = f.gt_class ? json(class_name(*f.gt_class)) : json(nullptr);
    const bool has_payload = i < buf.payloads.size() && !buf.payloads[i].empty();
    jf["payload"] = has_payload ? json(frame_image_path("", f.frame_id).filename().string())
                                : json(nullptr);
    frames.push_back(std::move(jf));
  }
  return json{{"schema", kManifestSchema},
              {"id", buf.index},
              {"value", buf.value},
              {"cost", buf.cost},
              {"tags", tags_to_json(buf.tags)},
              {"payloads", !buf.payloads.empty()},
              {"frames", std::move(frames)}};
}

FrameBuffer buffer_from_manifest(const json& m, const fs::path& dir) {
  FrameBuffer buf;
  buf.index = m.at("id").get<std::uint64_t>();
  buf.value = m.at("value").get<double>();
  buf.cost = m.at("cost").get<double>();
  buf.tags = tags_from_json(m.at("tags"));
  const bool has_payloads = m.at("payloads").get<bool>();
  for (const auto& jf : m.at("frames")) {
    FrameRecord f;
    f.frame_id = jf.at("frame_id").get<std::uint64_t>();
    f.raw_cost = jf.at("raw_cost").get<double>();
    f.anomaly_score = jf.at("s").get<double>();
    f.class_scores = jf.at("o").get<ClassScores>();
    f.value = jf.at("v").get<double>();
    f.objects = objects_from_json(jf.at("objects"));
    if (!jf.at("gt").is_null()) {
      auto c = parse_event_class(jf.at("gt").get<std::string>());
      if (!c) throw InputError("unknown gt class");
      f.gt_class = *c;
    }
    buf.smoothed_values.push_back(jf.at("v_smoothed").get<double>());
    buf.decisions.push_back(jf.at("d").get<double>());
    buf.stored_costs.push_back(jf.at("stored_cost").get<double>());
    if (has_payloads) {
      const auto& p = jf.at("payload");
      buf.payloads.push_back(p.is_null() ? std::vector<std::uint8_t>{}
                                         : read_file_bytes(dir / p.get<std::string>()));
    }
    buf.frames.push_back(std::move(f));
  }
  return buf;
}

json capacity_json(double c) { return std::isinf(c) ? json(nullptr) : json(c); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void BufferStore::persist(const fs::path& dir) const {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("buffer_")) fs::remove_all(entry.path());
  }

  json buffers = json::array();
  for (std::uint64_t id : ids()) {
    const FrameBuffer& buf = entries_.at(id);
    const fs::path bdir = dir / buffer_dir_name(id);
    fs::create_directories(bdir);
    json manifest = manifest_body(buf);
    manifest["checksum"] = checksum_of(manifest.dump());
    write_text(bdir / "manifest.json", manifest.dump());
    for (std::size_t i = 0; i < buf.payloads.size(); ++i) {
      if (!buf.payloads[i].empty()) {
        write_file_bytes(frame_image_path(bdir, buf.frames[i].frame_id), buf.payloads[i]);
      }
    }
    buffers.push_back(json{{"id", id},
                           {"value", buf.value},
                           {"cost", buf.cost},
                           {"dir", buffer_dir_name(id)},
                           {"checksum", manifest["checksum"]}});
  }
  json log = json::array();
  for (const auto& e : log_) {
    log.push_back(json{{"id", e.buffer_id},
                       {"value", e.value},
                       {"cost", e.cost},
                       {"reason", reason_name(e.reason)}});
  }
  json index{{"schema", kIndexSchema},
             {"policy", policy_name(policy_)},
             {"capacity", capacity_json(capacity_)},
             {"total_cost", total_cost_},
             {"buffers", std::move(buffers)},
             {"eviction_log", std::move(log)}};
  write_text(dir / "index.json", index.dump(1));
}

BufferStore BufferStore::load(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw InputError("no store index in " + dir.string());
  json index = json::parse(in, nullptr, false);
  if (index.is_discarded() || !index.is_object() || index.value("schema", "") != kIndexSchema) {
    throw InputError("corrupt store index in " + dir.string());
  }

  try {
    const json& cap = index.at("capacity");
    BufferStore store(parse_policy(index.at("policy").get<std::string>()),
                      cap.is_null() ? kUnlimited : cap.get<double>());

    for (const auto& entry : index.at("buffers")) {
      const auto id = entry.at("id").get<std::uint64_t>();
      auto fail = [id](const std::string& what) -> InputError {
        return InputError("buffer " + std::to_string(id) + ": " + what);
      };
      const fs::path bdir = dir / entry.at("dir").get<std::string>();
      std::ifstream min(bdir / "manifest.json");
      if (!min) throw fail("missing manifest");
      json manifest = json::parse(min, nullptr, false);
      if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("checksum")) {
        throw fail("unreadable manifest");
      }
      const std::string recorded = manifest["checksum"].get<std::string>();
      manifest.erase("checksum");
      if (checksum_of(manifest.dump()) != recorded || entry.at("checksum") != recorded) {
        throw fail("manifest checksum mismatch");
      }
      FrameBuffer buf;
      try {
        buf = buffer_from_manifest(manifest, bdir);
      } catch (const std::exception& e) {
        throw fail(std::string("malformed manifest: ") + e.what());
      }
      if (buf.index != id || buf.value != entry.at("value").get<double>() ||
          buf.cost != entry.at("cost").get<double>()) {
        throw fail("manifest disagrees with store index");
      }
      if (store.policy_ == RetentionPolicy::kPriority) {
        store.heap_.push_back(HeapKey{buf.value, id});
      } else {
        store.arrival_.push_back(id);
      }
      store.entries_.emplace(id, std::move(buf));
    }
    for (const auto& e : index.at("eviction_log")) {
      store.log_.push_back(EvictionRecord{e.at("id").get<std::uint64_t>(),
                                          e.at("value").get<double>(), e.at("cost").get<double>(),
                                          parse_reason(e.at("reason").get<std::string>())});
    }
    store.total_cost_ = index.at("total_cost").get<double>();
    if (!store.heap_property_holds()) throw InputError("store index violates heap order");
    return store;
  } catch (const json::exception& e) {
    throw InputError("corrupt store index in " + dir.string() + ": " + e.what());
  }
}

}  // namespace edr
