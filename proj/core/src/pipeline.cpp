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

#include "edr/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

namespace edr {

std::optional<FrameInput> VectorFrameSource::next() {
  if (pos_ == frames_.size()) return std::nullopt;
  return std::move(frames_[pos_++]);
}

std::vector<ObjectObservation> ObjectTrace::objects_for(std::uint64_t frame_id) {
  if (pos_ == records_.size() || records_[pos_].frame_id != frame_id) {
    throw InputError("object trace has no record for frame " + std::to_string(frame_id));
  }
  return std::move(records_[pos_++].objects);
}

// ---------------------------------------------------------------------------

ValueStage::ValueStage(const RunConfig& config, ScoreProvider& scores, ObjectSource* objects)
    : config_(config), scores_(scores), objects_(objects) {}

FrameRecord ValueStage::process(FrameInput input) {
  const std::uint64_t id = input.frame_id;
  if (last_id_ && id <= *last_id_) {
    throw InputError("frame " + std::to_string(id) + " arrives out of order");
  }
  last_id_ = id;
  if (config_.codec == CodecMode::kRealPixels && !input.image) {
    throw InputError("frame " + std::to_string(id) + " has no pixels in real-pixel mode");
  }

  FrameRecord rec;
  rec.frame_id = id;
  rec.raw_cost = input.raw_cost;
  rec.image = std::move(input.image);
  rec.gt_class = input.gt_class;
  if (input.objects) {
    rec.objects = std::move(*input.objects);
  } else if (objects_ != nullptr) {
    rec.objects = objects_->objects_for(id);
  }
  const Scores s = scores_.next(id, rec.gt_class);
  rec.anomaly_score = s.anomaly_score;
  rec.class_scores = s.class_scores;
  rec.value =
      hybrid_value(s.anomaly_score, s.class_scores, config_.value, config_.classes.info_measures);
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError("frame " + std::to_string(id) + ": " + e.what());
  }
  return rec;
}

// ---------------------------------------------------------------------------

std::optional<FinalizedBuffer> BufferStage::push(FrameRecord frame) {
  std::vector<std::int64_t> tracks;
  tracks.reserve(frame.objects.size());
  for (const auto& obj : frame.objects) tracks.push_back(obj.track_id);
  const double sim = similarity(tracks, state_.seen_tracks);

  std::optional<FinalizedBuffer> out;
  if (dmm_step(state_, config_.dmm, frame.value, sim, frame) == DmmAction::kTerminateThenStart) {
    out = finalize();
  }
  pending_.push_back(std::move(frame));
  return out;
}

std::optional<FinalizedBuffer> BufferStage::flush() {
  state_ = DmmState{};
  if (pending_.empty()) return std::nullopt;
  return finalize();
}

FinalizedBuffer BufferStage::finalize() {
  std::vector<FrameRecord> frames = std::move(pending_);
  pending_.clear();

  std::vector<double> values;
  values.reserve(frames.size());
  for (const auto& f : frames) values.push_back(f.value);
  std::vector<double> smoothed = smooth_values(values, config_.sigma);

  std::vector<double> decisions(frames.size());
  std::vector<double> stored(frames.size());
  std::vector<std::vector<std::uint8_t>> payloads;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    FrameRecord& f = frames[i];
    decisions[i] = lbo_decide(f.raw_cost, smoothed[i], config_.lbo, config_.compression);
    if (config_.codec == CodecMode::kModeled) {
      stored[i] = modeled_cost(f.raw_cost, decisions[i], config_.compression);
    } else {
      EncodedFrame enc = encode_frame(f.frame_id, *f.image, decisions[i], config_.encode);
      stored[i] = enc.cost;
      payloads.push_back(std::move(enc.payload));
      f.image.reset();  // only the encoded payload is kept
    }
  }

  FinalizedBuffer out;
  out.ledger.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameRecord& f = frames[i];
    const EventClass top = top_class(f.class_scores);
    out.ledger.push_back(FrameLedgerEntry{f.frame_id, f.gt_class, f.anomaly_score, top,
                                          f.class_scores[class_index(top)], f.value, smoothed[i],
                                          decisions[i], f.raw_cost, stored[i], next_index_});
  }
  out.buffer = finalize_buffer(std::move(frames), std::move(decisions), std::move(stored),
                               next_index_++, config_.lambda, config_.thresholds,
                               std::move(smoothed));
  out.buffer.payloads = std::move(payloads);
  return out;
}

// ---------------------------------------------------------------------------

StorageStage::StorageStage(const RunConfig& config)
    : config_(config), store_(config.policy, config.capacity) {}

void StorageStage::accept(FinalizedBuffer finalized) {
  const FrameBuffer& b = finalized.buffer;
  BufferLedgerEntry entry;
  entry.index = b.index;
  entry.first_frame = b.frames.empty() ? 0 : b.frames.front().frame_id;
  entry.frame_count = b.frames.size();
  entry.value = b.value;
  entry.cost = b.cost;
  entry.detected_classes = b.tags.detected_classes;
  entry.anomaly_max = b.tags.anomaly_max;

  const InsertResult result = store_.insert(std::move(finalized.buffer));
  if (result.outcome == InsertOutcome::kRejected) entry.fate = BufferFate::kRejected;
  for (std::uint64_t victim : result.evicted) {
    // Buffer indices are dense and assigned in ledger order.
    buffers_.at(victim).fate = BufferFate::kEvicted;
  }
  buffers_.push_back(std::move(entry));
  frames_.insert(frames_.end(), std::make_move_iterator(finalized.ledger.begin()),
                 std::make_move_iterator(finalized.ledger.end()));
}

RunReport StorageStage::finish(const std::string& fingerprint) {
  RunReport report;
  report.fingerprint = fingerprint;
  report.config = config_to_json(config_);
  report.frames = std::move(frames_);
  report.buffers = std::move(buffers_);
  report.aggregates = aggregate(report.frames, report.buffers);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void run_synchronous(FrameSource& frames, ValueStage& value, BufferStage& buffering,
                     StorageStage& storage, StreamFingerprint& fingerprint) {
  while (auto input = frames.next()) {
    fingerprint.add(input->frame_id, input->gt_class, input->raw_cost);
    if (auto done = buffering.push(value.process(std::move(*input)))) {
      storage.accept(std::move(*done));
    }
  }
  if (auto done = buffering.flush()) storage.accept(std::move(*done));
}

void run_threaded(std::size_t queue_capacity, FrameSource& frames, ValueStage& value,
                  BufferStage& buffering, StorageStage& storage,
                  StreamFingerprint& fingerprint) {
  BoundedQueue<FrameInput> captured(queue_capacity);
  BoundedQueue<FrameRecord> valued(queue_capacity);
  BoundedQueue<FinalizedBuffer> finished(queue_capacity);

  std::mutex error_mu;
  std::exception_ptr error;
  std::atomic<bool> failed = false;
  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu);
      if (!error) error = e;
    }
    failed = true;
    captured.close();
    valued.close();
    finished.close();
  };

  std::thread capture([&] {
    try {
      while (auto input = frames.next()) {
        fingerprint.add(input->frame_id, input->gt_class, input->raw_cost);
        if (!captured.push(std::move(*input))) return;
      }
    } catch (...) {
      fail(std::current_exception());
    }
    captured.close();
  });
  std::thread estimate([&] {
    try {
      FrameInput input;
      while (captured.pop(input)) {
        if (!valued.push(value.process(std::move(input)))) return;
      }
    } catch (...) {
      fail(std::current_exception());
    }
    valued.close();
  });
  std::thread manage([&] {
    try {
      FrameRecord rec;
      while (valued.pop(rec)) {
        if (auto done = buffering.push(std::move(rec))) {
          if (!finished.push(std::move(*done))) return;
        }
      }
      if (!failed) {
        if (auto done = buffering.flush()) finished.push(std::move(*done));
      }
    } catch (...) {
      fail(std::current_exception());
    }
    finished.close();
  });

  try {
    FinalizedBuffer done;
    while (finished.pop(done)) {
      if (failed) break;
      storage.accept(std::move(done));
    }
  } catch (...) {
    fail(std::current_exception());
  }
  capture.join();
  estimate.join();
  manage.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunResult run_pipeline(const RunConfig& config, FrameSource& frames, ScoreProvider& scores,
                       ObjectSource* objects) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  ValueStage value(config, scores, objects);
  BufferStage buffering(config);
  StorageStage storage(config);
  StreamFingerprint fingerprint;
  if (config.threaded) {
    run_threaded(config.queue_capacity, frames, value, buffering, storage, fingerprint);
  } else {
    run_synchronous(frames, value, buffering, storage, fingerprint);
  }

  RunResult result{storage.finish(fingerprint.hex()), std::move(storage.store()), 0.0};
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<FrameInput> synthetic_frames(const SyntheticStream& stream,
                                         const EncodeOptions& options) {
  std::vector<FrameInput> out;
  out.reserve(stream.frames.size());
  for (const auto& f : stream.frames) {
    out.push_back(FrameInput{f.frame_id, normalize_cost(f.raw_bytes, options.reference_bytes),
                             std::nullopt, f.gt_class, f.objects});
  }
  return out;
}

std::unique_ptr<ScoreProvider> make_score_provider(const RunConfig& config,
                                                   const SyntheticStream* stream) {
  switch (config.scores) {
    case ScoreMode::kGroundTruth:
      return std::make_unique<GroundTruthScoreProvider>();
    case ScoreMode::kSynthetic:
      if (stream != nullptr) return std::make_unique<ReplayScoreProvider>(stream->scores);
      return std::make_unique<SyntheticScoreProvider>(config.synth.noise,
                                                      score_seed(config.synth.seed));
    case ScoreMode::kReplay:
      break;
  }
  auto reader = std::make_shared<TraceReader>(config.replay_path);
  return std::make_unique<ReplayScoreProvider>([reader] { return reader->next(); });
}

RunResult run_synthetic(const RunConfig& config, const SyntheticStream& stream) {
  VectorFrameSource source(synthetic_frames(stream, config.encode));
  auto scores = make_score_provider(config, &stream);
  return run_pipeline(config, source, *scores);
}

}  // namespace edr
