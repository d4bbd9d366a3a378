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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "edr/pipeline.hpp"
#include "edr/report.hpp"
#include "support.hpp"

using namespace edr;

namespace {

RunConfig small_config(std::uint64_t frames, std::uint64_t seed, ScoreMode mode) {
  RunConfig c;
  c.synth.frames = frames;
  c.synth.anomaly_rate = 0.02;
  c.synth.seed = seed;
  c.scores = mode;
  return c;
}

RunReport run(const RunConfig& c) { return run_synthetic(c, synthesize_trace(c.synth)).report; }

Image textured(int w, int h, std::uint64_t seed) {
  test::Gen gen(seed);
  Image img{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h * 3))};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen.integer(0, 255));
  return img;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("an empty stream produces an empty report") {
    RunConfig c;
    c.scores = ScoreMode::kGroundTruth;
    VectorFrameSource src({});
    GroundTruthScoreProvider gt;
    const RunResult r = run_pipeline(c, src, gt);
    CHECK(r.report.frames.empty());
    CHECK(r.report.buffers.empty());
    CHECK(r.store.empty());
    CHECK(r.report.aggregates == RunAggregates{});
  }

  TEST_CASE("ten normal frames under ground truth are discarded to the floor") {
    std::vector<FrameInput> frames;
    for (std::uint64_t i = 0; i < 10; ++i) {
      frames.push_back(FrameInput{i, 0.5, std::nullopt, EventClass::kNormal, std::nullopt});
    }
    RunConfig c;
    c.scores = ScoreMode::kGroundTruth;
    VectorFrameSource src(frames);
    GroundTruthScoreProvider gt;
    const RunResult r = run_pipeline(c, src, gt);
    REQUIRE(r.report.frames.size() == 10);
    REQUIRE(r.report.buffers.size() == 1);
    for (const auto& f : r.report.frames) {
      CHECK(f.decision == 0.0);
      CHECK(f.value == 0.0);
      CHECK(f.stored_cost == doctest::Approx(modeled_cost(0.5, 0.0, c.compression)));
    }
    CHECK(r.report.buffers[0].value == 0.0);
    CHECK(r.report.buffers[0].frame_count == 10);
    CHECK(r.store.size() == 1);
  }

  TEST_CASE("anomalous ground-truth frames keep high quality") {
    const RunReport rep = run(small_config(20000, 3, ScoreMode::kGroundTruth));
    for (const auto& f : rep.frames) {
      if (is_anomaly(*f.gt_class)) {
        CHECK(f.decision > 0.9);
      } else {
        CHECK(f.decision == 0.0);
      }
    }
    const CompressionReport cr = compression_report(rep);
    CHECK(cr.ratio_increase >= 9.0);
  }

  TEST_CASE("runs are deterministic") {
    const RunConfig c = small_config(10000, 5, ScoreMode::kSynthetic);
    const RunReport a = run(c), b = run(c);
    CHECK(a == b);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  }

  TEST_CASE("threaded and synchronous runs agree") {
    for (ScoreMode mode : {ScoreMode::kGroundTruth, ScoreMode::kSynthetic}) {
      RunConfig c = small_config(20000, 7, mode);
      c.capacity = 50.0;
      const auto stream = synthesize_trace(c.synth);
      const RunResult sync = run_synthetic(c, stream);
      c.threaded = true;
      c.queue_capacity = 3;
      const RunResult threaded = run_synthetic(c, stream);
      CHECK(threaded.report.frames == sync.report.frames);
      CHECK(threaded.report.buffers == sync.report.buffers);
      CHECK(threaded.report.aggregates == sync.report.aggregates);
      CHECK(threaded.store == sync.store);
    }
  }

  TEST_CASE("ledgers are consistent with the store") {
    RunConfig c = small_config(20000, 8, ScoreMode::kSynthetic);
    c.capacity = 20.0;
    const RunResult r = run_synthetic(c, synthesize_trace(c.synth));
    CHECK(r.store.total_cost() <= 20.0 + 1e-9);
    std::uint64_t stored = 0;
    for (const auto& b : r.report.buffers) {
      const bool in_store = r.store.find(b.index) != nullptr;
      CHECK(in_store == (b.fate == BufferFate::kStored));
      stored += in_store;
    }
    CHECK(stored == r.store.size());
    CHECK(r.report.aggregates == aggregate(r.report.frames, r.report.buffers));
    // Every frame belongs to exactly one buffer, in order.
    std::uint64_t expect = 0;
    for (const auto& b : r.report.buffers) {
      CHECK(b.first_frame == expect);
      expect += b.frame_count;
    }
    CHECK(expect == r.report.frames.size());
  }

  TEST_CASE("a score trace that skips a frame fails naming the frame") {
    RunConfig c = small_config(200, 1, ScoreMode::kSynthetic);
    auto stream = synthesize_trace(c.synth);
    stream.scores.erase(stream.scores.begin() + 57);
    CHECK_THROWS_WITH_AS(run_synthetic(c, stream), doctest::Contains("frame 57"), InputError);
    c.threaded = true;
    CHECK_THROWS_WITH_AS(run_synthetic(c, stream), doctest::Contains("frame 57"), InputError);
  }

  TEST_CASE("object trace gaps and out-of-order frames are rejected") {
    std::vector<FrameInput> frames;
    for (std::uint64_t i = 0; i < 5; ++i) {
      frames.push_back(FrameInput{i, 0.1, std::nullopt, EventClass::kNormal, std::nullopt});
    }
    RunConfig c;
    c.scores = ScoreMode::kGroundTruth;
    {
      std::vector<ObjectRecord> objs = {{0, {}}, {1, {}}, {3, {}}};
      ObjectTrace trace(objs);
      VectorFrameSource src(frames);
      GroundTruthScoreProvider gt;
      CHECK_THROWS_WITH_AS(run_pipeline(c, src, gt, &trace), doctest::Contains("frame 2"),
                           InputError);
    }
    {
      auto shuffled = frames;
      std::swap(shuffled[1], shuffled[3]);
      VectorFrameSource src(shuffled);
      GroundTruthScoreProvider gt;
      CHECK_THROWS_AS(run_pipeline(c, src, gt), InputError);
    }
  }

  TEST_CASE("a buffer larger than the store is an error") {
    RunConfig c = small_config(1000, 2, ScoreMode::kGroundTruth);
    c.capacity = 0.01;
    CHECK_THROWS_AS(run(c), std::invalid_argument);
  }

  TEST_CASE("ground truth bounds noisy detection") {
    for (double noise : {0.2, 0.3, 0.5}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RunConfig c = small_config(20000, seed, ScoreMode::kGroundTruth);
        c.synth.noise.vad_sigma = c.synth.noise.oad_sigma = noise;
        const CompressionReport gt = compression_report(run(c));
        c.scores = ScoreMode::kSynthetic;
        const CompressionReport noisy = compression_report(run(c));
        CHECK(gt.stored_ratio >= noisy.stored_ratio);
      }
    }
  }

  TEST_CASE("real-pixel mode stores encoded payloads") {
    std::vector<FrameInput> frames;
    EncodeOptions enc;
    enc.reference_bytes = 96 * 64 * 3 * 20;  // cheap frames so anomalies keep quality
    for (std::uint64_t i = 0; i < 12; ++i) {
      Image img = textured(96, 64, i);
      const double raw = normalize_cost(jpeg_encode(img, enc.max_quality).size(), enc.reference_bytes);
      frames.push_back(FrameInput{i, raw, std::move(img),
                                  i >= 6 ? EventClass::kOC : EventClass::kNormal, std::nullopt});
    }
    RunConfig c;
    c.codec = CodecMode::kRealPixels;
    c.encode = enc;
    c.scores = ScoreMode::kGroundTruth;
    VectorFrameSource src(frames);
    GroundTruthScoreProvider gt;
    const RunResult r = run_pipeline(c, src, gt);
    REQUIRE(r.report.frames.size() == 12);
    for (const auto& f : r.report.frames) {
      CHECK(f.stored_cost > 0.0);
      if (f.frame_id >= 6) CHECK(f.stored_cost > r.report.frames[0].stored_cost);
    }
    for (std::uint64_t id : r.store.ids()) {
      const FrameBuffer* b = r.store.find(id);
      REQUIRE(b->payloads.size() == b->frames.size());
      for (const auto& f : b->frames) CHECK_FALSE(f.image.has_value());
    }
    test::TempDir dir;
    r.store.persist(dir.path());
    CHECK(BufferStore::load(dir.path()) == r.store);

    // Without pixels the real codec cannot run.
    VectorFrameSource bare({FrameInput{0, 0.5, std::nullopt, EventClass::kNormal, std::nullopt}});
    GroundTruthScoreProvider gt2;
    CHECK_THROWS_AS(run_pipeline(c, bare, gt2), InputError);
  }

  TEST_CASE("bounded queue drains after close") {
    BoundedQueue<int> q(2);
    CHECK(q.push(1));
    CHECK(q.push(2));
    q.close();
    CHECK_FALSE(q.push(3));
    int x = 0;
    CHECK(q.pop(x));
    CHECK(x == 1);
    CHECK(q.pop(x));
    CHECK(x == 2);
    CHECK_FALSE(q.pop(x));
  }

  TEST_CASE("decision statistics") {
    CHECK(describe(std::vector<double>{}) == DecisionStats{});
    const DecisionStats s = describe(std::vector<double>{0.4, 0.1, 0.3, 0.2});
    CHECK(s.count == 4);
    CHECK(s.mean == doctest::Approx(0.25));
    CHECK(s.median == doctest::Approx(0.25));
    CHECK(s.stddev == doctest::Approx(std::sqrt(0.0125)));
    CHECK(describe(std::vector<double>{0.7, 0.1, 0.3}).median == 0.3);
  }

  TEST_CASE("reports round trip through json and refuse tampered aggregates") {
    RunConfig c = small_config(5000, 4, ScoreMode::kSynthetic);
    c.capacity = 10.0;
    const RunReport rep = run(c);
    test::TempDir dir;
    write_report(rep, dir / "r.json");
    CHECK(read_report(dir / "r.json") == rep);

    nlohmann::json j = report_to_json(rep);
    j["frames"][0]["d"] = 0.123456;
    CHECK_THROWS_AS(report_from_json(j), InputError);
    CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), InputError);
  }

  TEST_CASE("the fingerprint depends only on the input stream") {
    RunConfig a = small_config(3000, 6, ScoreMode::kGroundTruth);
    RunConfig b = a;
    b.value.alpha = 0.3;
    b.capacity = 5.0;
    b.policy = RetentionPolicy::kFifo;
    CHECK(run(a).fingerprint == run(b).fingerprint);
    RunConfig other = a;
    other.synth.seed = 7;
    CHECK(run(a).fingerprint != run(other).fingerprint);
  }
}
