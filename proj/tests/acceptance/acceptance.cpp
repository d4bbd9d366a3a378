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

// Acceptance checks. Each criterion prints one PASS or FAIL line; the exit
// status is nonzero when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "edr/pipeline.hpp"
#include "edr/report.hpp"

namespace fs = std::filesystem;
using namespace edr;

namespace {

// Tolerances and scales fixed by the acceptance contract.
constexpr std::uint64_t kStreamFrames = 100'000;
constexpr double kAnomalyRate = 0.005;
constexpr double kNoiseLevel = 0.3;
constexpr std::array<std::uint64_t, 5> kSeeds = {1, 2, 3, 4, 5};
constexpr double kGtMinRatioGain = 10.0;          // stored ratio >= 10x raw ratio
constexpr double kGtMaxSeconds = 60.0;
constexpr std::array<double, 4> kLimitFractions = {0.4, 0.2, 0.1, 0.05};  // 8:4:2:1
constexpr double kMinPriorityGain = 1.25;         // +25% at the smallest limit
constexpr int kMaxGainFailures = 1;
constexpr double kInfoTolerance = 0.01;
constexpr int kLboTuples = 1000;
constexpr double kLboGridStep = 1e-4;
constexpr double kLboTolerance = 1e-4;
constexpr int kLboMonotoneGrid = 50;
constexpr double kLboMaxSeconds = 10.0;
constexpr int kStoreOperations = 10'000;
constexpr double kMinFramesPerSecond = 5000.0;

// Reference information-measure row, ST .. OO*.
constexpr std::array<double, kNumAnomalyClasses> kReferenceInfo = {
    0.977, 0.635, 0.633, 0.816, 0.395, 0.957, 0.995, 0.525,
    1.0,   0.521, 0.491, 0.546, 0.342, 1.0,   0.990, 0.576};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

RunConfig stream_config(std::uint64_t seed) {
  RunConfig c;
  c.synth.frames = kStreamFrames;
  c.synth.anomaly_rate = kAnomalyRate;
  c.synth.noise.vad_sigma = kNoiseLevel;
  c.synth.noise.oad_sigma = kNoiseLevel;
  c.synth.seed = seed;
  return c;
}

// --- 1 --------------------------------------------------------------------

Outcome ground_truth_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = stream_config(1);
  c.scores = ScoreMode::kGroundTruth;
  const RunReport rep = run_synthetic(c, synthesize_trace(c.synth)).report;
  const double elapsed = seconds_since(t0);

  bool normal_zero = true;
  std::optional<double> anomaly_d;
  bool anomaly_constant = true;
  for (const auto& f : rep.frames) {
    if (is_anomaly(*f.gt_class)) {
      if (!anomaly_d) anomaly_d = f.decision;
      anomaly_constant = anomaly_constant && f.decision == *anomaly_d;
    } else {
      normal_zero = normal_zero && f.decision == 0.0;
    }
  }
  const CompressionReport cr = compression_report(rep);
  const double gain = cr.stored_ratio / cr.raw_ratio;
  const bool pass = normal_zero && anomaly_d && anomaly_constant && gain >= kGtMinRatioGain &&
                    elapsed <= kGtMaxSeconds;
  return {pass, "normal d all 0: " + std::string(normal_zero ? "yes" : "no") +
                    ", anomaly d constant: " + (anomaly_constant && anomaly_d ? fmt(*anomaly_d) : "no") +
                    ", stored/raw ratio gain " + fmt(gain) + "x (need >= " +
                    fmt(kGtMinRatioGain) + "x), " + fmt(elapsed, 3) + " s"};
}

// --- 2 --------------------------------------------------------------------

Outcome noisy_direction() {
  Outcome out{true, ""};
  for (std::uint64_t seed : kSeeds) {
    const RunConfig c = stream_config(seed);
    const CompressionReport cr = compression_report(run_synthetic(c, synthesize_trace(c.synth)).report);
    const bool ok = cr.anomaly.decisions.mean > cr.normal.decisions.mean &&
                    cr.stored_ratio > cr.raw_ratio;
    out.pass = out.pass && ok;
    out.detail += "seed " + std::to_string(seed) + ": d " + fmt(cr.anomaly.decisions.mean) +
                  " vs " + fmt(cr.normal.decisions.mean) + ", ratio +" +
                  fmt(100.0 * cr.ratio_increase, 3) + "%" + (ok ? "" : " FAIL") + "; ";
  }
  return out;
}

// --- 3 --------------------------------------------------------------------

Outcome priority_versus_fifo() {
  bool a_ok = true, b_ok = true;
  int gain_failures = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    RunConfig c = stream_config(seed);
    const SyntheticStream stream = synthesize_trace(c.synth);
    const double total = run_synthetic(c, stream).store.total_cost();
    std::vector<double> limits;
    std::vector<RunReport> pri, fifo;
    for (double frac : kLimitFractions) {
      limits.push_back(total * frac);
      c.capacity = limits.back();
      c.policy = RetentionPolicy::kPriority;
      pri.push_back(run_synthetic(c, stream).report);
      c.policy = RetentionPolicy::kFifo;
      fifo.push_back(run_synthetic(c, stream).report);
    }
    const auto rows = retention_report(pri, fifo, limits);
    bool seed_a = true, seed_b = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      seed_a = seed_a && rows[i].priority.anomaly >= rows[i].fifo.anomaly;
      if (i > 0) seed_b = seed_b && rows[i].priority.anomaly_share > rows[i - 1].priority.anomaly_share;
    }
    const auto& last = rows.back();
    const double gain = last.priority.anomaly_to_normal / last.fifo.anomaly_to_normal;
    const bool seed_c = gain >= kMinPriorityGain;
    a_ok = a_ok && seed_a;
    b_ok = b_ok && seed_b;
    gain_failures += seed_c ? 0 : 1;
    detail += "seed " + std::to_string(seed) + ": share " + fmt(100 * rows.front().priority.anomaly_share, 3) +
              "%->" + fmt(100 * last.priority.anomaly_share, 3) + "%, gain " + fmt(gain, 3) + "x" +
              (seed_a && seed_b && seed_c ? "" : " (a/b/c " + std::to_string(seed_a) +
                                                    std::to_string(seed_b) + std::to_string(seed_c) + ")") +
              "; ";
  }
  return {a_ok && b_ok && gain_failures <= kMaxGainFailures, detail};
}

// --- 4 --------------------------------------------------------------------

Outcome information_measures() {
  const ClassModel m = ClassModel::dota();
  double worst = 0.0;
  std::string misses;
  for (std::size_t i = 0; i < kNumAnomalyClasses; ++i) {
    const double got = m.info_measures[i + 1];
    const double diff = std::abs(got - kReferenceInfo[i]);
    worst = std::max(worst, diff);
    if (diff > kInfoTolerance) {
      misses += std::string(class_name(static_cast<EventClass>(i + 1))) + " " + fmt(got) +
                " vs " + fmt(kReferenceInfo[i]) + "; ";
    }
  }
  return {misses.empty(), "max deviation " + fmt(worst) + " (tolerance " + fmt(kInfoTolerance) +
                              ")" + (misses.empty() ? "" : ", outside: " + misses)};
}

// --- 5 --------------------------------------------------------------------

Outcome quality_decision_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int steps = static_cast<int>(std::lround(1.0 / kLboGridStep));
  double worst = 0.0;
  for (int t = 0; t < kLboTuples; ++t) {
    const CompressionModel m{0.1 + 1.9 * u(rng), 0.05 + 0.94 * u(rng), 0.3 * u(rng)};
    const double c = u(rng), v = u(rng), k = 0.05 + 4.95 * u(rng);
    const double d = lbo_decide(c, v, LboParams{k, 1.0}, m);
    double best = 0.0, best_j = c * phi(0.0, m);
    for (int i = 1; i <= steps; ++i) {
      const double x = i * kLboGridStep;
      const double j = c * phi(x, m) - k * v * x;
      if (j < best_j) best_j = j, best = x;
    }
    worst = std::max(worst, std::abs(d - best));
  }
  bool monotone = true;
  const LboParams p;
  const CompressionModel m;
  for (int i = 0; i < kLboMonotoneGrid; ++i) {
    for (int j = 0; j < kLboMonotoneGrid; ++j) {
      const double c = static_cast<double>(i) / (kLboMonotoneGrid - 1);
      const double v = static_cast<double>(j) / (kLboMonotoneGrid - 1);
      const double d = lbo_decide(c, v, p, m);
      if (j + 1 < kLboMonotoneGrid) {
        monotone = monotone && lbo_decide(c, static_cast<double>(j + 1) / (kLboMonotoneGrid - 1), p, m) >= d;
      }
      if (i + 1 < kLboMonotoneGrid) {
        monotone = monotone && lbo_decide(static_cast<double>(i + 1) / (kLboMonotoneGrid - 1), v, p, m) <= d;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= kLboTolerance + 1e-12 && monotone && elapsed <= kLboMaxSeconds,
          "max |closed form - grid| " + fmt(worst) + " over " + std::to_string(kLboTuples) +
              " tuples, monotone " + (monotone ? "yes" : "no") + ", " + fmt(elapsed, 3) + " s"};
}

// --- 6 --------------------------------------------------------------------

Outcome store_invariants() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> eighths(1, 24);
  std::uniform_int_distribution<int> twentieths(0, 20);
  const double capacity = 6.0;
  BufferStore store(RetentionPolicy::kPriority, capacity);
  std::vector<std::pair<double, std::uint64_t>> oracle;  // ascending (value, id)
  std::map<std::uint64_t, double> oracle_cost;
  double oracle_total = 0.0;
  int violations = 0, evictions = 0, rejections = 0;

  for (int op = 0; op < kStoreOperations; ++op) {
    const auto id = static_cast<std::uint64_t>(op);
    const double cost = eighths(rng) / 8.0;  // dyadic, so sums are exact
    // Coarse values give ties; aging makes newer buffers worth more so the
    // store keeps evicting.
    const double value = twentieths(rng) / 20.0 * std::pow(1.0005, op);

    // Oracle: evict the smallest values until the newcomer fits, rejecting
    // when a needed victim is worth at least as much.
    std::size_t n = 0;
    double freed = 0.0;
    bool reject = false;
    while (oracle_total - freed + cost > capacity && n < oracle.size()) {
      if (oracle[n].first >= value) {
        reject = true;
        break;
      }
      freed += oracle_cost[oracle[n].second];
      ++n;
    }
    std::vector<std::uint64_t> expected;
    if (!reject) {
      for (std::size_t i = 0; i < n; ++i) {
        expected.push_back(oracle[i].second);
        oracle_total -= oracle_cost[oracle[i].second];
        oracle_cost.erase(oracle[i].second);
      }
      oracle.erase(oracle.begin(), oracle.begin() + static_cast<std::ptrdiff_t>(n));
      oracle.insert(std::upper_bound(oracle.begin(), oracle.end(), std::pair{value, id}),
                    std::pair{value, id});
      oracle_cost[id] = cost;
      oracle_total += cost;
    }

    FrameBuffer b;
    b.index = id;
    b.value = value;
    b.cost = cost;
    const InsertResult r = store.insert(std::move(b));
    auto got = r.evicted;
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    rejections += r.outcome == InsertOutcome::kRejected;
    evictions += static_cast<int>(got.size());

    bool ok = (r.outcome == InsertOutcome::kRejected) == reject && got == expected &&
              store.total_cost() <= capacity && store.total_cost() == oracle_total &&
              store.heap_property_holds() && store.size() == oracle.size();
    // Every victim was worth no more than anything that stayed.
    for (std::uint64_t victim : r.evicted) {
      const auto& log = store.eviction_log();
      const auto it = std::find_if(log.rbegin(), log.rend(),
                                   [&](const EvictionRecord& e) { return e.buffer_id == victim; });
      const double vv = it == log.rend() ? 2.0 : it->value;
      for (std::uint64_t kept : store.ids()) {
        if (kept != id) ok = ok && vv <= store.find(kept)->value;
      }
    }
    violations += ok ? 0 : 1;
  }
  return {violations == 0, std::to_string(kStoreOperations) + " inserts, " +
                               std::to_string(evictions) + " evictions, " +
                               std::to_string(rejections) + " rejections, " +
                               std::to_string(violations) + " disagreements with the oracle"};
}

// --- 7 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for report.json and every store manifest/index.
std::map<std::string, std::string> run_artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  out["report.json"] = slurp(dir / "report.json");
  for (const auto& e : fs::recursive_directory_iterator(dir / "store")) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

Outcome determinism(const std::string& edr_binary) {
  if (edr_binary.empty()) return {false, "no --edr binary given"};
  const fs::path work = fs::temp_directory_path() / ("edr-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(work);
  std::array<std::map<std::string, std::string>, 2> artifacts;
  for (int i = 0; i < 2; ++i) {
    const fs::path out = work / ("run" + std::to_string(i));
    const std::string cmd = "\"" + edr_binary + "\" run --modeled --seed 7 --num-frames 20000 " +
                            "--memory-limit 40 --out \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove_all(work);
      return {false, "edr run failed: " + cmd};
    }
    artifacts[static_cast<std::size_t>(i)] = run_artifacts(out);
  }
  fs::remove_all(work);
  const bool same = artifacts[0] == artifacts[1];
  return {same && artifacts[0].size() > 2,
          std::to_string(artifacts[0].size()) + " files compared, " +
              (same ? "byte-identical" : "DIFFERENT")};
}

// --- 8 --------------------------------------------------------------------

// Statistics recomputed straight from a frame ledger.
std::array<double, 4> recount(const std::vector<double>& d) {
  if (d.empty()) return {0, 0, 0, 0};
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  std::vector<double> s = d;
  std::sort(s.begin(), s.end());
  const std::size_t mid = s.size() / 2;
  const double median = s.size() % 2 ? s[mid] : (s[mid - 1] + s[mid]) / 2.0;
  return {n, mean, median, std::sqrt(ss / n)};
}

Outcome sweep_endpoints() {
  const RunConfig base = stream_config(1);
  const SyntheticStream stream = synthesize_trace(base.synth);
  std::map<std::pair<double, double>, RunReport> runs;
  const auto rows = value_method_sweep(base, default_value_grid(), [&](const RunConfig& c) {
    RunReport r = run_synthetic(c, stream).report;
    runs[{c.value.alpha, c.value.beta}] = r;
    return r;
  });
  const auto table = sweep_table(rows);

  int mismatches = 0;
  for (const auto& row : table) {
    const auto key = std::pair{row["alpha"].get<double>(), row["beta"].get<double>()};
    const bool anomaly = row["group"] == "anomaly";
    std::vector<double> d;
    for (const auto& f : runs.at(key).frames) {
      if (is_anomaly(*f.gt_class) == anomaly) d.push_back(f.decision);
    }
    const auto want = recount(d);
    mismatches += row["frames"].get<double>() != want[0];
    mismatches += row["d_count"].get<double>() != want[0];
    mismatches += row["d_mean"].get<double>() != want[1];
    mismatches += row["d_median"].get<double>() != want[2];
    mismatches += row["d_std"].get<double>() != want[3];
  }
  const bool shape = rows.size() == 6 && rows[0].alpha == 1.0 && rows[0].beta == 0.0 &&
                     rows[1].alpha == 0.0 && rows[1].beta == 1.0 && table.size() == 12;
  std::string detail = std::to_string(rows.size()) + " weightings, " +
                       std::to_string(table.size()) + " rows, " + std::to_string(mismatches) +
                       " statistics differ from the recount";
  for (const auto& r : rows) {
    detail += "; (" + fmt(r.alpha, 2) + "," + fmt(r.beta, 2) + ") d " +
              fmt(r.stats.normal.decisions.mean, 3) + "/" + fmt(r.stats.anomaly.decisions.mean, 3);
  }
  return {shape && mismatches == 0, detail};
}

// --- 9 --------------------------------------------------------------------

Outcome throughput() {
  const RunConfig c = stream_config(1);
  const SyntheticStream stream = synthesize_trace(c.synth);
  const RunResult r = run_synthetic(c, stream);
  const double fps = static_cast<double>(r.report.frames.size()) / r.seconds;
  return {fps >= kMinFramesPerSecond,
          fmt(fps, 6) + " frames/s single-threaded (need >= " + fmt(kMinFramesPerSecond) + ")"};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edr acceptance checks"};
  std::vector<int> selected;
  std::string edr_binary;
  app.add_option("--criterion", selected, "Criterion number(s) to run; default all")
      ->check(CLI::Range(1, 9));
  app.add_option("--edr", edr_binary, "Path to the edr executable (criterion 7)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {"ground-truth upper bound", ground_truth_bound},
      {"noisy detector direction", noisy_direction},
      {"priority versus fifo retention", priority_versus_fifo},
      {"information measures", information_measures},
      {"quality decision oracle", quality_decision_oracle},
      {"store invariants", store_invariants},
      {"determinism", [&] { return determinism(edr_binary); }},
      {"value sweep recount", sweep_endpoints},
      {"throughput", throughput},
  };
  if (selected.empty()) {
    for (int i = 1; i <= 9; ++i) selected.push_back(i);
  }

  int failures = 0;
  for (int n : selected) {
    const Criterion& c = all[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "C" << n << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name << ": "
              << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
