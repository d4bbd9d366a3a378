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

#include <random>

#include <benchmark/benchmark.h>

#include "edr/pipeline.hpp"

namespace {

using namespace edr;

void BM_QualityDecision(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> inputs(1024);
  for (auto& [c, v] : inputs) c = u(rng), v = u(rng);
  const LboParams p;
  const CompressionModel m;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [c, v] = inputs[i++ & 1023];
    benchmark::DoNotOptimize(lbo_decide(c, v, p, m));
  }
}
BENCHMARK(BM_QualityDecision);

void BM_PriorityInsert(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto _ : state) {
    state.PauseTiming();
    BufferStore store(RetentionPolicy::kPriority, static_cast<double>(state.range(0)) * 0.25);
    std::vector<FrameBuffer> buffers(4096);
    for (std::size_t k = 0; k < buffers.size(); ++k) {
      buffers[k].index = k;
      buffers[k].value = u(rng);
      buffers[k].cost = u(rng);
    }
    state.ResumeTiming();
    for (auto& b : buffers) benchmark::DoNotOptimize(store.insert(std::move(b)));
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_PriorityInsert)->Arg(64)->Arg(1024);

void BM_Pipeline(benchmark::State& state) {
  RunConfig c;
  c.synth.frames = static_cast<std::uint64_t>(state.range(0));
  c.threaded = state.range(1) != 0;
  const SyntheticStream stream = synthesize_trace(c.synth);
  for (auto _ : state) benchmark::DoNotOptimize(run_synthetic(c, stream));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pipeline)->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
