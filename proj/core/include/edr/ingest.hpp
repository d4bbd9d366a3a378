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
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edr/codec.hpp"
#include "edr/core.hpp"

namespace edr {

// Line-delimited JSON trace files. Every line carries a "schema" tag.
//
// score trace:  {"schema":"edr.trace/1","frame_id":7,"s":0.12,"o":[17 reals],
//                "gt":"OC" (optional),"objects":[...] (optional)}
// label trace:  {"schema":"edr.labels/1","frame_id":7,"gt":"OC"}
// object trace: {"schema":"edr.objects/1","frame_id":7,"objects":[
//                  {"track_id":3,"class":"car","bbox":[x1,y1,x2,y2],"conf":0.9}]}
//
// Sizes file (modeled mode): CSV with header "frame_id,bytes".
// Image directory (real mode): frame_%08d.jpg, one file per frame id.
inline constexpr std::string_view kTraceSchema = "edr.trace/1";
inline constexpr std::string_view kLabelSchema = "edr.labels/1";
inline constexpr std::string_view kObjectSchema = "edr.objects/1";

nlohmann::json object_to_json(const ObjectObservation& obj);
ObjectObservation object_from_json(const nlohmann::json& j);
nlohmann::json objects_to_json(std::span<const ObjectObservation> objects);
std::vector<ObjectObservation> objects_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const TraceRecord& rec);
// Throws InputError describing the first schema violation.
TraceRecord trace_from_json(const nlohmann::json& j);

// Sequential reader over a JSON-lines file that enforces the schema tag and
// strictly increasing frame ids. Errors carry the file name and line number.
class JsonLinesReader {
 public:
  JsonLinesReader(const std::filesystem::path& path, std::string_view schema);

  // Next non-blank line as parsed JSON, or nullopt at end of file.
  std::optional<nlohmann::json> next();
  [[noreturn]] void fail(const std::string& what) const;
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::string schema_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::optional<std::uint64_t> last_id_;
};

class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path);
  std::optional<TraceRecord> next();

 private:
  JsonLinesReader reader_;
};

std::vector<TraceRecord> read_score_trace(const std::filesystem::path& path);
// Throws std::invalid_argument if records are not strictly increasing.
void write_trace(std::span<const TraceRecord> records, const std::filesystem::path& path);

struct LabelRecord {
  std::uint64_t frame_id = 0;
  EventClass gt_class = EventClass::kNormal;
  bool operator==(const LabelRecord&) const = default;
};

std::vector<LabelRecord> read_labels(const std::filesystem::path& path);
void write_labels(std::span<const LabelRecord> labels, const std::filesystem::path& path);

struct ObjectRecord {
  std::uint64_t frame_id = 0;
  std::vector<ObjectObservation> objects;
  bool operator==(const ObjectRecord&) const = default;
};

std::vector<ObjectRecord> read_objects(const std::filesystem::path& path);
void write_objects(std::span<const ObjectRecord> records, const std::filesystem::path& path);

struct FrameSize {
  std::uint64_t frame_id = 0;
  std::uint64_t bytes = 0;
  bool operator==(const FrameSize&) const = default;
};

std::vector<FrameSize> read_frame_sizes(const std::filesystem::path& path);
void write_frame_sizes(std::span<const FrameSize> sizes, const std::filesystem::path& path);

enum class FrameMode { kModeled, kRealPixels };

struct FramePayload {
  std::uint64_t frame_id = 0;
  double raw_cost = 0.0;
  std::optional<Image> image;
};

// Frame stream in id order. Modeled mode reads a sizes file; real mode reads
// an image directory and measures each frame's raw cost as its size when
// encoded at maximum quality. Ids must be consecutive.
class FrameReader {
 public:
  FrameReader(const std::filesystem::path& path, FrameMode mode, const EncodeOptions& options);
  std::optional<FramePayload> next();
  std::size_t size() const { return ids_.size(); }

 private:
  FrameMode mode_;
  EncodeOptions options_;
  std::filesystem::path dir_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint64_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<FramePayload> read_frames(const std::filesystem::path& path, FrameMode mode,
                                      const EncodeOptions& options);

std::filesystem::path frame_image_path(const std::filesystem::path& dir, std::uint64_t frame_id);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace edr
