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

#include "edr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <regex>
#include <sstream>

namespace edr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <typename T>
void require_increasing(std::span<const T> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].frame_id <= records[i - 1].frame_id) {
      throw std::invalid_argument("records must have strictly increasing frame ids (frame " +
                                  std::to_string(records[i].frame_id) + ")");
    }
  }
}

std::uint64_t frame_id_of(const json& j) {
  if (!j.contains("frame_id") || !j["frame_id"].is_number_unsigned()) {
    throw InputError("missing or invalid frame_id");
  }
  return j["frame_id"].get<std::uint64_t>();
}

EventClass class_of(const json& j) {
  if (!j.is_string()) throw InputError("class label must be a string");
  auto c = parse_event_class(j.get<std::string>());
  if (!c) throw InputError("unknown event class '" + j.get<std::string>() + "'");
  return *c;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

json object_to_json(const ObjectObservation& obj) {
  return json{{"track_id", obj.track_id},
              {"class", obj.object_class},
              {"bbox", obj.bbox},
              {"conf", obj.confidence}};
}

ObjectObservation object_from_json(const json& j) {
  ObjectObservation obj;
  try {
    obj.track_id = j.at("track_id").get<std::int64_t>();
    obj.object_class = j.at("class").get<std::string>();
    const auto& bbox = j.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) throw InputError("bbox must have 4 entries");
    for (std::size_t i = 0; i < 4; ++i) obj.bbox[i] = bbox[i].get<double>();
    obj.confidence = j.at("conf").get<double>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed object: ") + e.what());
  }
  try {
    obj.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return obj;
}

json objects_to_json(std::span<const ObjectObservation> objects) {
  json arr = json::array();
  for (const auto& o : objects) arr.push_back(object_to_json(o));
  return arr;
}

std::vector<ObjectObservation> objects_from_json(const json& j) {
  if (!j.is_array()) throw InputError("objects must be an array");
  std::vector<ObjectObservation> out;
  out.reserve(j.size());
  for (const auto& o : j) out.push_back(object_from_json(o));
  return out;
}

json trace_to_json(const TraceRecord& rec) {
  json j{{"schema", kTraceSchema},
         {"frame_id", rec.frame_id},
         {"s", rec.anomaly_score},
         {"o", rec.class_scores}};
  if (rec.gt_class) j["gt"] = class_name(*rec.gt_class);
  if (rec.objects) j["objects"] = objects_to_json(*rec.objects);
  return j;
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord rec;
  rec.frame_id = frame_id_of(j);
  if (!j.contains("s") || !j["s"].is_number()) throw InputError("missing or invalid s");
  rec.anomaly_score = j["s"].get<double>();
  if (!(rec.anomaly_score >= 0.0 && rec.anomaly_score <= 1.0)) {
    throw InputError("anomaly score outside [0,1]");
  }
  if (!j.contains("o") || !j["o"].is_array()) throw InputError("missing class score vector o");
  const auto& o = j["o"];
  if (o.size() != kNumClasses) {
    throw InputError("class score vector has " + std::to_string(o.size()) + " entries, expected " +
                     std::to_string(kNumClasses));
  }
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (!o[i].is_number()) throw InputError("class score entries must be numbers");
    rec.class_scores[i] = o[i].get<double>();
  }
  if (j.contains("gt")) rec.gt_class = class_of(j["gt"]);
  if (j.contains("objects")) rec.objects = objects_from_json(j["objects"]);
  return rec;
}

// ---------------------------------------------------------------------------

JsonLinesReader::JsonLinesReader(const fs::path& path, std::string_view schema)
    : path_(path), schema_(schema), in_(path, std::ios::binary) {
  if (!in_) throw InputError("cannot open " + path.string());
}

void JsonLinesReader::fail(const std::string& what) const {
  throw InputError(path_.string() + ":" + std::to_string(line_) + ": " + what);
}

std::optional<json> JsonLinesReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
    if (!j.contains("schema") || j["schema"] != schema_) {
      fail("missing or unexpected schema tag (want " + schema_ + ")");
    }
    std::uint64_t id = 0;
    try {
      id = frame_id_of(j);
    } catch (const InputError& e) {
      fail(e.what());
    }
    if (last_id_ && id == *last_id_) fail("duplicate frame_id " + std::to_string(id));
    if (last_id_ && id < *last_id_) fail("frame_id " + std::to_string(id) + " out of order");
    last_id_ = id;
    return j;
  }
  return std::nullopt;
}

TraceReader::TraceReader(const fs::path& path) : reader_(path, kTraceSchema) {}

std::optional<TraceRecord> TraceReader::next() {
  auto j = reader_.next();
  if (!j) return std::nullopt;
  try {
    return trace_from_json(*j);
  } catch (const InputError& e) {
    reader_.fail(e.what());
  }
}

std::vector<TraceRecord> read_score_trace(const fs::path& path) {
  TraceReader reader(path);
  std::vector<TraceRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

void write_trace(std::span<const TraceRecord> records, const fs::path& path) {
  require_increasing(records);
  auto out = open_for_write(path);
  for (const auto& r : records) out << trace_to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<LabelRecord> read_labels(const fs::path& path) {
  JsonLinesReader reader(path, kLabelSchema);
  std::vector<LabelRecord> out;
  while (auto j = reader.next()) {
    if (!j->contains("gt")) reader.fail("missing gt");
    try {
      out.push_back(LabelRecord{(*j)["frame_id"].get<std::uint64_t>(), class_of((*j)["gt"])});
    } catch (const InputError& e) {
      reader.fail(e.what());
    }
  }
  return out;
}

void write_labels(std::span<const LabelRecord> labels, const fs::path& path) {
  require_increasing(labels);
  auto out = open_for_write(path);
  for (const auto& l : labels) {
    out << json{{"schema", kLabelSchema}, {"frame_id", l.frame_id}, {"gt", class_name(l.gt_class)}}
               .dump()
        << '\n';
  }
}

std::vector<ObjectRecord> read_objects(const fs::path& path) {
  JsonLinesReader reader(path, kObjectSchema);
  std::vector<ObjectRecord> out;
  while (auto j = reader.next()) {
    if (!j->contains("objects")) reader.fail("missing objects");
    try {
      out.push_back(ObjectRecord{(*j)["frame_id"].get<std::uint64_t>(),
                                 objects_from_json((*j)["objects"])});
    } catch (const InputError& e) {
      reader.fail(e.what());
    }
  }
  return out;
}

void write_objects(std::span<const ObjectRecord> records, const fs::path& path) {
  require_increasing(records);
  auto out = open_for_write(path);
  for (const auto& r : records) {
    out << json{{"schema", kObjectSchema},
                {"frame_id", r.frame_id},
                {"objects", objects_to_json(r.objects)}}
               .dump()
        << '\n';
  }
}

std::vector<FrameSize> read_frame_sizes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<FrameSize> out;
  std::string text;
  std::size_t line = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": " + what);
  };
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (line == 1 && text == "frame_id,bytes") continue;
    const auto comma = text.find(',');
    if (comma == std::string::npos) fail("expected 'frame_id,bytes'");
    FrameSize fs_rec;
    if (!parse_u64(std::string_view(text).substr(0, comma), fs_rec.frame_id) ||
        !parse_u64(std::string_view(text).substr(comma + 1), fs_rec.bytes)) {
      fail("malformed integer");
    }
    if (!out.empty() && fs_rec.frame_id <= out.back().frame_id) {
      fail(fs_rec.frame_id == out.back().frame_id ? "duplicate frame_id" : "frame_id out of order");
    }
    out.push_back(fs_rec);
  }
  return out;
}

void write_frame_sizes(std::span<const FrameSize> sizes, const fs::path& path) {
  require_increasing(sizes);
  auto out = open_for_write(path);
  out << "frame_id,bytes\n";
  for (const auto& s : sizes) out << s.frame_id << ',' << s.bytes << '\n';
}

// ---------------------------------------------------------------------------

fs::path frame_image_path(const fs::path& dir, std::uint64_t frame_id) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%08llu.jpg", static_cast<unsigned long long>(frame_id));
  return dir / name;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  auto out = open_for_write(path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

FrameReader::FrameReader(const fs::path& path, FrameMode mode, const EncodeOptions& options)
    : mode_(mode), options_(options), dir_(path) {
  if (mode == FrameMode::kModeled) {
    for (const auto& s : read_frame_sizes(path)) {
      ids_.push_back(s.frame_id);
      bytes_.push_back(s.bytes);
    }
  } else {
    if (!fs::is_directory(path)) throw InputError("not an image directory: " + path.string());
    static const std::regex kName(R"(frame_(\d{8})\.jpg)");
    for (const auto& entry : fs::directory_iterator(path)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && std::regex_match(name, m, kName)) {
        ids_.push_back(std::stoull(m[1].str()));
      }
    }
    std::sort(ids_.begin(), ids_.end());
  }
  for (std::size_t i = 1; i < ids_.size(); ++i) {
    if (ids_[i] != ids_[i - 1] + 1) {
      throw InputError(path.string() + ": frame ids jump from " + std::to_string(ids_[i - 1]) +
                       " to " + std::to_string(ids_[i]) + " (missing frame " +
                       std::to_string(ids_[i - 1] + 1) + ")");
    }
  }
}

std::optional<FramePayload> FrameReader::next() {
  if (pos_ == ids_.size()) return std::nullopt;
  FramePayload out;
  out.frame_id = ids_[pos_];
  if (mode_ == FrameMode::kModeled) {
    out.raw_cost = normalize_cost(bytes_[pos_], options_.reference_bytes);
  } else {
    const auto path = frame_image_path(dir_, out.frame_id);
    try {
      out.image = jpeg_decode(read_file_bytes(path));
      out.raw_cost = normalize_cost(jpeg_encode(*out.image, options_.max_quality).size(),
                                    options_.reference_bytes);
    } catch (const std::runtime_error& e) {
      throw CodecError(out.frame_id, e.what());
    }
  }
  ++pos_;
  return out;
}

std::vector<FramePayload> read_frames(const fs::path& path, FrameMode mode,
                                      const EncodeOptions& options) {
  FrameReader reader(path, mode, options);
  std::vector<FramePayload> out;
  while (auto f = reader.next()) out.push_back(std::move(*f));
  return out;
}

}  // namespace edr
