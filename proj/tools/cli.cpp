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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>

#include "edr/codec.hpp"
#include "edr/config.hpp"
#include "edr/ingest.hpp"
#include "edr/pipeline.hpp"
#include "edr/report.hpp"
#include "edr/storage.hpp"
#include "edr/synth.hpp"

namespace edr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flags shared by every command that runs the pipeline.
struct RunFlags {
  std::string config_path;
  std::string memory_limit;
  std::string mode = "priority";
  double alpha = 0, beta = 0, eta = 0, zeta = 0, lambda = 0, sigma = 0;
  std::uint64_t seed = 0;
  std::string scores;
  bool modeled = false;
  bool real_pixels = false;
  bool threaded = false;
  std::uint64_t num_frames = 0;
  double anomaly_rate = 0;
  double noise = 0;
  std::string frames_path, labels_path, objects_path;
  std::string out = "edr-out";

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

// Stream-shaping flags understood by `synth` as well as the run commands.
void add_stream_flags(CLI::App* app, RunFlags& f) {
  f.opts["config"] = app->add_option("--config", f.config_path, "JSON run configuration")
                         ->check(CLI::ExistingFile);
  f.opts["seed"] = app->add_option("--seed", f.seed, "Seed for every random choice");
  f.opts["num-frames"] = app->add_option("--num-frames", f.num_frames, "Synthetic stream length");
  f.opts["anomaly-rate"] =
      app->add_option("--anomaly-rate", f.anomaly_rate, "Fraction of anomalous frames");
  f.opts["noise"] = app->add_option("--noise", f.noise, "Synthetic detector noise level");
  app->add_option("--out", f.out, "Output directory");
}

void add_run_flags(CLI::App* app, RunFlags& f, bool with_mode) {
  add_stream_flags(app, f);
  f.opts["memory-limit"] = app->add_option("--memory-limit", f.memory_limit,
                                           "Store capacity in cost units, or 'unlimited'");
  if (with_mode) {
    f.opts["mode"] = app->add_option("--mode", f.mode, "Retention policy")
                         ->check(CLI::IsMember({"priority", "fifo", "both"}));
  }
  f.opts["alpha"] = app->add_option("--alpha", f.alpha, "Anomaly-score weight");
  f.opts["beta"] = app->add_option("--beta", f.beta, "Class-confidence weight");
  f.opts["eta"] = app->add_option("--eta", f.eta, "Value weight of the quality tradeoff");
  f.opts["zeta"] = app->add_option("--zeta", f.zeta, "Cost weight of the quality tradeoff");
  f.opts["lambda"] = app->add_option("--lambda", f.lambda, "Buffer aging rate");
  f.opts["sigma"] = app->add_option("--sigma", f.sigma, "Value smoothing width in frames");
  f.opts["scores"] =
      app->add_option("--scores", f.scores, "Score source: gt | replay:<path> | synthetic");
  auto* modeled = app->add_flag("--modeled", f.modeled, "Model stored sizes (default)");
  auto* real = app->add_flag("--real-pixels", f.real_pixels, "Encode real images");
  modeled->excludes(real);
  f.opts["threaded"] = app->add_flag("--threaded", f.threaded, "Run stages on separate threads");
  app->add_option("--frames", f.frames_path, "Sizes CSV (modeled) or image directory (real)");
  app->add_option("--labels", f.labels_path, "Ground-truth label trace");
  app->add_option("--objects", f.objects_path, "Object trace");
}

double parse_limit(const std::string& text) {
  if (text == "unlimited" || text == "inf") return BufferStore::kUnlimited;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0) return v;
  } catch (const std::exception&) {
  }
  throw InputError("--memory-limit expects a positive number or 'unlimited', got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(std::string(flag) + ": not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw InputError(std::string(flag) + " needs at least one value");
  return out;
}

RunConfig effective_config(const RunFlags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = load_config(f.config_path);
  if (f.given("seed")) c.synth.seed = f.seed;
  if (f.given("num-frames")) c.synth.frames = f.num_frames;
  if (f.given("anomaly-rate")) c.synth.anomaly_rate = f.anomaly_rate;
  if (f.given("noise")) c.synth.noise.vad_sigma = c.synth.noise.oad_sigma = f.noise;
  if (f.given("memory-limit")) c.capacity = parse_limit(f.memory_limit);
  if (f.given("mode") && f.mode != "both") c.policy = parse_policy(f.mode);
  if (f.given("alpha")) c.value.alpha = f.alpha;
  if (f.given("beta")) c.value.beta = f.beta;
  if (f.given("eta")) c.lbo.eta = f.eta;
  if (f.given("zeta")) c.lbo.zeta = f.zeta;
  if (f.given("lambda")) c.lambda = f.lambda;
  if (f.given("sigma")) c.sigma = f.sigma;
  if (f.given("threaded")) c.threaded = f.threaded;
  if (f.modeled) c.codec = CodecMode::kModeled;
  if (f.real_pixels) c.codec = CodecMode::kRealPixels;
  if (f.given("scores")) {
    if (f.scores == "gt") {
      c.scores = ScoreMode::kGroundTruth;
    } else if (f.scores == "synthetic") {
      c.scores = ScoreMode::kSynthetic;
    } else if (f.scores.rfind("replay:", 0) == 0 && f.scores.size() > 7) {
      c.scores = ScoreMode::kReplay;
      c.replay_path = f.scores.substr(7);
    } else {
      throw InputError("--scores expects gt, synthetic or replay:<path>, got '" + f.scores + "'");
    }
  }
  c.validate();
  return c;
}

// Everything a run reads, loaded once so repeated runs see the same input.
struct Dataset {
  std::vector<FrameInput> frames;
  std::optional<SyntheticStream> stream;
  std::vector<TraceRecord> trace;
  std::optional<std::vector<ObjectRecord>> objects;
};

Dataset load_dataset(const RunConfig& c, const RunFlags& f) {
  Dataset d;
  if (!f.frames_path.empty()) {
    const FrameMode mode =
        c.codec == CodecMode::kModeled ? FrameMode::kModeled : FrameMode::kRealPixels;
    for (auto& p : read_frames(f.frames_path, mode, c.encode)) {
      d.frames.push_back(FrameInput{p.frame_id, p.raw_cost, std::move(p.image), std::nullopt,
                                    std::nullopt});
    }
  } else {
    if (c.codec == CodecMode::kRealPixels) {
      throw InputError("real-pixel mode needs --frames <image directory>");
    }
    d.stream = synthesize_trace(c.synth);
    d.frames = synthetic_frames(*d.stream, c.encode);
  }
  if (c.scores == ScoreMode::kReplay) d.trace = read_score_trace(c.replay_path);

  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < d.frames.size(); ++i) index[d.frames[i].frame_id] = i;

  if (!f.labels_path.empty()) {
    for (const auto& l : read_labels(f.labels_path)) {
      if (auto it = index.find(l.frame_id); it != index.end()) d.frames[it->second].gt_class = l.gt_class;
    }
    for (const auto& fr : d.frames) {
      if (!fr.gt_class) throw InputError("label trace has no record for frame " + std::to_string(fr.frame_id));
    }
  }
  for (const auto& rec : d.trace) {
    auto it = index.find(rec.frame_id);
    if (it == index.end()) continue;
    FrameInput& fr = d.frames[it->second];
    if (!fr.gt_class && rec.gt_class) fr.gt_class = rec.gt_class;
    if (f.objects_path.empty() && rec.objects) fr.objects = rec.objects;
  }
  if (!f.objects_path.empty()) d.objects = read_objects(f.objects_path);
  return d;
}

RunResult execute(const RunConfig& c, const Dataset& d) {
  VectorFrameSource source(d.frames);
  std::unique_ptr<ScoreProvider> scores;
  if (c.scores == ScoreMode::kReplay) {
    scores = std::make_unique<ReplayScoreProvider>(d.trace);
  } else {
    scores = make_score_provider(c, d.stream ? &*d.stream : nullptr);
  }
  std::optional<ObjectTrace> objects;
  if (d.objects) objects.emplace(*d.objects);
  return run_pipeline(c, source, *scores, objects ? &*objects : nullptr);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

bool fully_labeled(const RunReport& r) { return r.aggregates.unlabeled_frames == 0; }

void write_report_tables(const RunReport& r, const fs::path& dir, int bins) {
  if (fully_labeled(r)) {
    write_table(compression_table(compression_report(r)), dir, "compression");
    write_table(class_decision_table(r), dir, "class_decisions");
    write_table(histogram_table(per_class_histograms(r, bins)), dir, "histograms");
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunFlags& f, std::ostream& out) {
  RunConfig c = effective_config(f);
  const SyntheticStream s = synthesize_trace(c.synth);
  const fs::path dir = f.out;
  std::vector<LabelRecord> labels;
  std::vector<ObjectRecord> objects;
  std::vector<FrameSize> sizes;
  for (const auto& fm : s.frames) {
    labels.push_back(LabelRecord{fm.frame_id, fm.gt_class});
    objects.push_back(ObjectRecord{fm.frame_id, fm.objects});
    sizes.push_back(FrameSize{fm.frame_id, fm.raw_bytes});
  }
  write_trace(s.scores, dir / "trace.jsonl");
  write_labels(labels, dir / "labels.jsonl");
  write_objects(objects, dir / "objects.jsonl");
  write_frame_sizes(sizes, dir / "sizes.csv");
  write_json(dir / "config.json", config_to_json(c));
  out << "wrote " << s.frames.size() << " frames (" << s.anomalous_frames()
      << " anomalous) to " << dir.string() << '\n';
  return kSuccess;
}

void write_run(const RunResult& r, const fs::path& dir, std::ostream& out) {
  write_json(dir / "config.json", r.report.config);
  write_report(r.report, dir / "report.json");
  r.store.persist(dir / "store");
  write_report_tables(r.report, dir / "tables", kDefaultHistogramBins);
  const double n = static_cast<double>(r.report.frames.size());
  const double fps = r.seconds > 0.0 ? n / r.seconds : 0.0;
  // Wall-clock numbers stay out of report.json so that it is reproducible.
  write_json(dir / "timing.json",
             json{{"frames", r.report.frames.size()}, {"seconds", r.seconds},
                  {"frames_per_second", fps}});
  const auto& a = r.report.aggregates;
  out << dir.string() << ": " << r.report.frames.size() << " frames, " << a.buffers
      << " buffers (" << a.stored_buffers << " stored, " << a.evicted_buffers << " evicted, "
      << a.rejected_buffers << " rejected), store cost " << a.store_total_cost << ", "
      << std::fixed << std::setprecision(0) << fps << " frames/s\n"
      << std::defaultfloat;
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  RunConfig c = effective_config(f);
  const Dataset d = load_dataset(c, f);
  if (f.given("mode") && f.mode == "both") {
    for (RetentionPolicy p : {RetentionPolicy::kPriority, RetentionPolicy::kFifo}) {
      c.policy = p;
      write_run(execute(c, d), fs::path(f.out) / std::string(policy_name(p)), out);
    }
  } else {
    write_run(execute(c, d), f.out, out);
  }
  return kSuccess;
}

int cmd_compare(const RunFlags& f, const std::string& limits_text,
                const std::string& fractions_text, const std::string& pair_text,
                std::ostream& out) {
  RunConfig c = effective_config(f);
  const Dataset d = load_dataset(c, f);

  std::vector<RetentionPolicy> pair;
  {
    std::stringstream ss(pair_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        pair.push_back(parse_policy(item));
      } catch (const std::invalid_argument& e) {
        throw InputError(std::string("--pair: ") + e.what());
      }
    }
    if (pair.size() != 2) throw InputError("--pair expects two policies, e.g. priority,fifo");
  }

  std::vector<double> limits;
  if (!limits_text.empty()) {
    limits = parse_list(limits_text, "--limits");
  } else {
    RunConfig unlimited = c;
    unlimited.capacity = BufferStore::kUnlimited;
    const double total = execute(unlimited, d).store.total_cost();
    for (double frac : parse_list(fractions_text, "--fractions")) limits.push_back(total * frac);
  }

  std::vector<RunReport> first, second;
  for (double limit : limits) {
    c.capacity = limit;
    c.policy = pair[0];
    first.push_back(execute(c, d).report);
    c.policy = pair[1];
    second.push_back(execute(c, d).report);
  }
  const auto rows = retention_report(first, second, limits);
  const auto table = retention_table(rows);
  c.capacity = BufferStore::kUnlimited;
  c.policy = RetentionPolicy::kPriority;
  write_json(fs::path(f.out) / "config.json", config_to_json(c));
  write_table(table, f.out, "retention");
  out << to_csv(table);
  return kSuccess;
}

int cmd_sweep(const RunFlags& f, const std::string& grid_text, std::ostream& out) {
  const RunConfig c = effective_config(f);
  const Dataset d = load_dataset(c, f);
  ValueGrid grid = default_value_grid();
  if (!grid_text.empty()) {
    grid.clear();
    std::stringstream ss(grid_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw InputError("--grid entries look like alpha:beta");
      const auto a = parse_list(item.substr(0, colon), "--grid");
      const auto b = parse_list(item.substr(colon + 1), "--grid");
      grid.emplace_back(a.front(), b.front());
    }
  }
  const auto rows =
      value_method_sweep(c, grid, [&](const RunConfig& rc) { return execute(rc, d).report; });
  const auto table = sweep_table(rows);
  write_json(fs::path(f.out) / "config.json", config_to_json(c));
  write_table(table, f.out, "sweep");
  out << to_csv(table);
  return kSuccess;
}

int cmd_calibrate(const std::string& images_dir, int steps, const std::string& out_dir,
                  std::ostream& out) {
  if (!fs::is_directory(images_dir)) throw InputError("not an image directory: " + images_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (entry.is_regular_file() && (ext == ".jpg" || ext == ".jpeg")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no JPEG images in " + images_dir);
  std::vector<Image> images;
  for (const auto& p : files) {
    try {
      images.push_back(jpeg_decode(read_file_bytes(p)));
    } catch (const InputError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw InputError(p.string() + ": " + e.what());
    }
  }
  const EncodeOptions options;
  const auto samples = measure_phi_samples(images, steps, options);
  const PhiFit fit = fit_phi(samples);

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json row;
    row["quality"] = s.quality;
    row["ratio"] = s.ratio;
    row["fitted"] = phi(s.quality, fit.model);
    rows.push_back(std::move(row));
  }
  write_table(rows, out_dir, "phi_samples");
  // A config fragment that can be passed straight to --config.
  write_json(fs::path(out_dir) / "phi.json",
             json{{"compression",
                   {{"a1", fit.model.a1}, {"a2", fit.model.a2}, {"a3", fit.model.a3}}}});
  out << "fitted a1=" << fit.model.a1 << " a2=" << fit.model.a2 << " a3=" << fit.model.a3
      << " rms=" << fit.rms_residual << " from " << images.size() << " images\n";
  return kSuccess;
}

int cmd_report(const std::string& report_path, int bins, const std::string& out_dir,
               std::ostream& out) {
  const RunReport r = read_report(report_path);
  if (!fully_labeled(r)) throw InputError(report_path + ": report tables need labeled frames");
  const auto compression = compression_table(compression_report(r));
  write_table(compression, out_dir, "compression");
  write_table(class_decision_table(r), out_dir, "class_decisions");
  write_table(histogram_table(per_class_histograms(r, bins)), out_dir, "histograms");
  out << to_csv(compression);
  return kSuccess;
}

int cmd_query(const std::string& store_dir, const std::string& where, std::ostream& out) {
  const BufferStore store = BufferStore::load(store_dir);
  TagPredicate pred;
  try {
    pred = parse_tag_predicate(where);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("--where: ") + e.what());
  }
  for (std::uint64_t id : store.query(pred)) {
    const FrameBuffer* b = store.find(id);
    out << id << " V=" << b->value << " C=" << b->cost << " frames=" << b->frames.size()
        << " classes=";
    for (std::size_t i = 0; i < b->tags.detected_classes.size(); ++i) {
      out << (i ? "|" : "") << class_name(b->tags.detected_classes[i]);
    }
    out << '\n';
  }
  return kSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Value-driven event data recorder", "edr"};
  app.require_subcommand(1);

  RunFlags synth_f, run_f, compare_f, sweep_f;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic stream and its traces");
  add_stream_flags(synth, synth_f);

  auto* run = app.add_subcommand("run", "Run the recorder over one stream");
  add_run_flags(run, run_f, true);

  std::string limits, fractions = "0.4,0.2,0.1,0.05", pair = "priority,fifo";
  auto* compare = app.add_subcommand("compare", "Compare two retention policies across limits");
  add_run_flags(compare, compare_f, false);
  compare->add_option("--limits", limits, "Comma-separated memory limits in cost units");
  compare->add_option("--fractions", fractions,
                      "Limits as fractions of the unlimited stored total (when --limits is absent)");
  compare->add_option("--pair", pair, "Two policies to compare");

  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "Sweep the value weights alpha and beta");
  add_run_flags(sweep, sweep_f, false);
  sweep->add_option("--grid", grid, "alpha:beta pairs, comma separated");

  std::string images, calib_out = "edr-out";
  int steps = 11;
  auto* calibrate = app.add_subcommand("calibrate-phi", "Fit the quality-to-size curve");
  calibrate->add_option("--images", images, "Directory of sample JPEG images")->required();
  calibrate->add_option("--steps", steps, "Quality ladder points")->check(CLI::Range(4, 101));
  calibrate->add_option("--out", calib_out, "Output directory");

  std::string report_path, report_out = "edr-out";
  int bins = kDefaultHistogramBins;
  auto* report = app.add_subcommand("report", "Re-derive tables from a saved run report");
  report->add_option("--report", report_path, "report.json of a previous run")->required();
  report->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  report->add_option("--out", report_out, "Output directory");

  std::string store_dir, where = "*";
  auto* query = app.add_subcommand("query", "Search a persisted store by buffer tags");
  query->add_option("--store", store_dir, "Store directory")->required();
  query->add_option("--where", where, "Tag predicate, e.g. class=OC,max_s>0.8");

  if (argc <= 1) {
    err << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_f, out);
    if (*run) return cmd_run(run_f, out);
    if (*compare) return cmd_compare(compare_f, limits, fractions, pair, out);
    if (*sweep) return cmd_sweep(sweep_f, grid, out);
    if (*calibrate) return cmd_calibrate(images, steps, calib_out, out);
    if (*report) return cmd_report(report_path, bins, report_out, out);
    if (*query) return cmd_query(store_dir, where, out);
  } catch (const InputError& e) {
    err << "edr: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "edr: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "edr: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace edr::cli
