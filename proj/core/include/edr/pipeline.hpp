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

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "edr/config.hpp"
#include "edr/ingest.hpp"
#include "edr/run_report.hpp"
#include "edr/storage.hpp"
#include "edr/synth.hpp"

namespace edr {

// One captured frame before value estimation.
struct FrameInput {
  std::uint64_t frame_id = 0;
  double raw_cost = 0.0;
  std::optional<Image> image;
  std::optional<EventClass> gt_class;
  // Objects embedded with the frame; when absent the object source is asked.
  std::optional<std::vector<ObjectObservation>> objects;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<FrameInput> next() = 0;
};

class VectorFrameSource final : public FrameSource {
 public:
  explicit VectorFrameSource(std::vector<FrameInput> frames) : frames_(std::move(frames)) {}
  std::optional<FrameInput> next() override;

 private:
  std::vector<FrameInput> frames_;
  std::size_t pos_ = 0;
};

class ObjectSource {
 public:
  virtual ~ObjectSource() = default;
  // Throws InputError when the source has no record for the frame.
  virtual std::vector<ObjectObservation> objects_for(std::uint64_t frame_id) = 0;
};

// Object trace consumed in frame order; every frame needs a record.
class ObjectTrace final : public ObjectSource {
 public:
  explicit ObjectTrace(std::vector<ObjectRecord> records) : records_(std::move(records)) {}
  std::vector<ObjectObservation> objects_for(std::uint64_t frame_id) override;

 private:
  std::vector<ObjectRecord> records_;
  std::size_t pos_ = 0;
};

// Bounded blocking queue with a single producer and a single consumer.
// close() wakes both sides; pop() then drains what is left and returns
// false, push() returns false.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  bool pop(T& out) {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

// A buffer ready for storage together with its frames' ledger rows.
struct FinalizedBuffer {
  FrameBuffer buffer;
  std::vector<FrameLedgerEntry> ledger;
};

// Scores a captured frame and computes its value.
class ValueStage {
 public:
  ValueStage(const RunConfig& config, ScoreProvider& scores, ObjectSource* objects);
  FrameRecord process(FrameInput input);

 private:
  const RunConfig& config_;
  ScoreProvider& scores_;
  ObjectSource* objects_;
  std::optional<std::uint64_t> last_id_;
};

// Groups frames into buffers and, once a buffer closes, smooths its values,
// picks per-frame qualities, compresses and finalizes it.
class BufferStage {
 public:
  explicit BufferStage(const RunConfig& config) : config_(config) {}

  std::optional<FinalizedBuffer> push(FrameRecord frame);
  std::optional<FinalizedBuffer> flush();

 private:
  FinalizedBuffer finalize();

  const RunConfig& config_;
  DmmState state_;
  std::vector<FrameRecord> pending_;
  std::uint64_t next_index_ = 0;
};

// Offers buffers to the store and assembles the report.
class StorageStage {
 public:
  explicit StorageStage(const RunConfig& config);
  void accept(FinalizedBuffer finalized);
  RunReport finish(const std::string& fingerprint);
  BufferStore& store() { return store_; }

 private:
  const RunConfig& config_;
  BufferStore store_;
  std::vector<FrameLedgerEntry> frames_;
  std::vector<BufferLedgerEntry> buffers_;
};

struct RunResult {
  RunReport report;
  BufferStore store;
  double seconds = 0.0;
};

// Runs every frame of the source through the four stages. config.threaded
// selects one thread per stage joined by bounded queues; the output is the
// same either way.
RunResult run_pipeline(const RunConfig& config, FrameSource& frames, ScoreProvider& scores,
                       ObjectSource* objects = nullptr);

// Frame inputs for a synthetic stream: raw costs normalized against the
// configured reference size, labels and objects embedded.
std::vector<FrameInput> synthetic_frames(const SyntheticStream& stream,
                                         const EncodeOptions& options);

// Score provider selected by config.scores. Synthetic scores replay the
// stream's own trace; replay reads config.replay_path.
std::unique_ptr<ScoreProvider> make_score_provider(const RunConfig& config,
                                                   const SyntheticStream* stream);

// Convenience: the pipeline over a synthetic stream.
RunResult run_synthetic(const RunConfig& config, const SyntheticStream& stream);

}  // namespace edr
