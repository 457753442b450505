#pragma once

// File-level commands behind the `ripagg` tool. Each takes resolved options,
// reads the wire formats, and returns a report or writes a stream; `run`
// turns errors into exit codes.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ripagg/aggregation.hpp"
#include "ripagg/error.hpp"
#include "ripagg/evaluation.hpp"
#include "ripagg/formats.hpp"
#include "ripagg/report.hpp"
#include "ripagg/synth.hpp"

namespace ripagg::pipeline {

namespace fs = std::filesystem;
using Boxes = std::vector<std::optional<BoundingBox>>;

struct RunConfig {
  AggregationConfig aggregation;
  EvalConfig eval;
  std::optional<double> min_score;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  // Frames skipped before scoring in `evaluate`.
  std::int64_t skip_frames = 0;
  // `compare` scores from the first full-window frame unless this is set.
  bool score_warmup = false;
};

/// The files that describe one video.
struct VideoFiles {
  fs::path manifest;
  fs::path detections;
  std::optional<fs::path> annotations;
};

/// Batch layout: <dir>/<name>.manifest.json with sibling
/// <name>.detections.jsonl and <name>.annotations.jsonl, taken in name order.
inline std::vector<VideoFiles> discover_batch(const fs::path &dir, bool need_annotations) {
  if (!fs::is_directory(dir)) throw ValidationError("batch path '" + dir.string() + "' is not a directory");
  static constexpr std::string_view kSuffix = ".manifest.json";
  std::vector<std::string> names;
  for (const auto &entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.size() > kSuffix.size() && file.ends_with(kSuffix)) {
      names.push_back(file.substr(0, file.size() - kSuffix.size()));
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw ValidationError("no *.manifest.json files in '" + dir.string() + "'");
  std::vector<VideoFiles> out;
  for (const auto &name : names) {
    VideoFiles v{dir / (name + ".manifest.json"), dir / (name + ".detections.jsonl"), std::nullopt};
    if (need_annotations) v.annotations = dir / (name + ".annotations.jsonl");
    out.push_back(std::move(v));
  }
  return out;
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Results keep index
/// order; the lowest-index failure is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, const std::function<T(std::size_t)> &fn) {
  std::vector<std::optional<T>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto &r : results) out.push_back(std::move(*r));
  return out;
}

inline std::ifstream open_input(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

struct LoadedVideo {
  formats::Manifest manifest;
  Boxes detections;  // reduced to the largest box per frame
  std::optional<Boxes> ground_truth;
};

inline LoadedVideo load_video(const VideoFiles &files, const RunConfig &cfg) {
  LoadedVideo v;
  v.manifest = formats::read_manifest(files.manifest.string());
  const formats::ParseOptions deferred{false};
  {
    auto in = open_input(files.detections);
    v.detections = formats::reduce_all(
        formats::parse_detections(in, v.manifest, files.detections.string(), deferred),
        cfg.min_score);
  }
  if (files.annotations) {
    auto in = open_input(*files.annotations);
    v.ground_truth = formats::boxes_of(
        formats::parse_annotations(in, v.manifest, files.annotations->string(), deferred));
    if (v.ground_truth->size() != v.detections.size()) {
      throw AlignmentError(std::min(v.ground_truth->size(), v.detections.size()),
                           files.annotations->string() + " has " +
                               std::to_string(v.ground_truth->size()) + " frames, " +
                               files.detections.string() + " has " +
                               std::to_string(v.detections.size()));
    }
  }
  if (static_cast<std::int64_t>(v.detections.size()) != v.manifest.frame_count) {
    throw ValidationError(files.detections.string() + ": stream has " +
                          std::to_string(v.detections.size()) +
                          " frames but manifest frame_count is " +
                          std::to_string(v.manifest.frame_count));
  }
  return v;
}

inline Boxes boxes_of(std::span<const AggregatedDetection> stream) {
  Boxes out;
  out.reserve(stream.size());
  for (const auto &a : stream) out.push_back(a.box);
  return out;
}

/// Streams detections through the buffer with constant memory, writing one
/// detection record (zero or one box) per input frame.
inline void aggregate_file(std::istream &detections, const formats::Manifest &manifest,
                           const RunConfig &cfg, std::ostream &out,
                           const std::string &src = "detections") {
  formats::DetectionReader reader(detections, manifest, src);
  AccumulationBuffer buffer(manifest.dims(), cfg.aggregation);
  while (auto rec = reader.next()) {
    const AggregatedDetection agg = buffer.update(formats::reduce(*rec, cfg.min_score));
    formats::DetectionRecord emitted{agg.frame, {}};
    if (agg.box) emitted.boxes.push_back({*agg.box, std::nullopt});
    out << formats::emit_detection(emitted) << '\n';
  }
}

namespace detail {

inline formats::ReportParams eval_params(const RunConfig &cfg) {
  formats::ReportParams p;
  p.iou_threshold = formats::Fixed3::from_double(cfg.eval.iou_threshold());
  if (cfg.eval.inclusive()) p.iou_inclusive = true;
  p.min_score = cfg.min_score;
  return p;
}

inline void check_unique_names(const std::vector<formats::ReportRow> &rows) {
  std::set<std::string> seen;
  for (const auto &r : rows) {
    if (!seen.insert(r.video).second) {
      throw ValidationError("video name '" + r.video + "' appears more than once");
    }
  }
}

inline void sort_rows(std::vector<formats::ReportRow> &rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto &a, const auto &b) { return a.video < b.video; });
  check_unique_names(rows);
}

inline std::optional<formats::ReportAverage> column_average(
    const std::vector<formats::ReportRow> &rows, std::size_t column) {
  std::vector<VideoAccuracy> acc;
  for (const auto &row : rows) {
    const auto &cell = row.cells[column].accuracy;
    if (!cell) return std::nullopt;
    acc.push_back({row.video, cell->total_frames, cell->correct_frames});
  }
  if (acc.empty()) return std::nullopt;
  return formats::ReportAverage::from(summarize(acc));
}

inline formats::AccuracyCell score(const LoadedVideo &v, const Boxes &det,
                                   std::size_t from, const EvalConfig &eval) {
  if (from >= det.size()) {
    throw ValidationError("video '" + v.manifest.video + "' has " + std::to_string(det.size()) +
                          " frames, nothing left to score from frame " + std::to_string(from));
  }
  const std::span<const std::optional<BoundingBox>> gt(*v.ground_truth);
  const std::span<const std::optional<BoundingBox>> d(det);
  const VideoAccuracy a = video_accuracy(v.manifest.video, gt.subspan(from), d.subspan(from), eval);
  return {a.total_frames, a.correct_frames};
}

inline formats::Report finish(formats::Report r) {
  sort_rows(r.rows);
  for (std::size_t c = 0; c < r.columns.size(); ++c) r.averages.push_back(column_average(r.rows, c));
  return r;
}

}  // namespace detail

inline formats::Report evaluate(const std::vector<VideoFiles> &videos, const RunConfig &cfg) {
  formats::Report r;
  r.command = "evaluate";
  r.params = detail::eval_params(cfg);
  r.params.scored_from = cfg.skip_frames;
  r.columns = {"detections"};
  r.rows = parallel_map<formats::ReportRow>(videos.size(), cfg.jobs, [&](std::size_t i) {
    const LoadedVideo v = load_video(videos[i], cfg);
    formats::ReportRow row{v.manifest.video, v.manifest.frame_count, {}};
    row.cells.push_back({detail::score(v, v.detections, static_cast<std::size_t>(cfg.skip_frames), cfg.eval),
                         std::nullopt});
    return row;
  });
  return detail::finish(std::move(r));
}

/// Raw (largest box per frame) against aggregated detections: accuracy on the
/// scored range and stability over the whole clip.
inline formats::Report compare(const std::vector<VideoFiles> &videos, const RunConfig &cfg) {
  const std::size_t from =
      cfg.score_warmup ? 0 : static_cast<std::size_t>(cfg.aggregation.window() - 1);
  formats::Report r;
  r.command = "compare";
  r.params = detail::eval_params(cfg);
  r.params.window = cfg.aggregation.window();
  r.params.threshold = cfg.aggregation.threshold();
  r.params.scored_from = static_cast<std::int64_t>(from);
  r.columns = {"raw", "aggregated"};
  r.rows = parallel_map<formats::ReportRow>(videos.size(), cfg.jobs, [&](std::size_t i) {
    const LoadedVideo v = load_video(videos[i], cfg);
    const Boxes aggregated =
        boxes_of(aggregate_stream(v.detections, v.manifest.dims(), cfg.aggregation));
    formats::ReportRow row{v.manifest.video, v.manifest.frame_count, {}};
    for (const Boxes *stream : {&v.detections, &aggregated}) {
      row.cells.push_back({detail::score(v, *stream, from, cfg.eval),
                           formats::StabilityCell::from(stability(*stream))});
    }
    return row;
  });
  return detail::finish(std::move(r));
}

/// Consecutive-frame stability of the raw stream, and of its aggregated
/// counterpart when `with_aggregated` is set.
inline formats::Report stability_report(const std::vector<VideoFiles> &videos,
                                        const RunConfig &cfg, bool with_aggregated) {
  formats::Report r;
  r.command = "stability";
  if (cfg.min_score) r.params.min_score = cfg.min_score;
  if (with_aggregated) {
    r.params.window = cfg.aggregation.window();
    r.params.threshold = cfg.aggregation.threshold();
    r.columns = {"raw", "aggregated"};
  } else {
    r.columns = {"detections"};
  }
  r.rows = parallel_map<formats::ReportRow>(videos.size(), cfg.jobs, [&](std::size_t i) {
    const LoadedVideo v = load_video(videos[i], cfg);
    formats::ReportRow row{v.manifest.video, v.manifest.frame_count, {}};
    row.cells.push_back({std::nullopt, formats::StabilityCell::from(stability(v.detections))});
    if (with_aggregated) {
      const Boxes aggregated =
          boxes_of(aggregate_stream(v.detections, v.manifest.dims(), cfg.aggregation));
      row.cells.push_back({std::nullopt, formats::StabilityCell::from(stability(aggregated))});
    }
    return row;
  });
  return detail::finish(std::move(r));
}

/// Writes <dir>/<video>.{manifest.json,detections.jsonl,annotations.jsonl}.
inline VideoFiles write_synthetic(const synth::JitterScenario &scn, const fs::path &dir) {
  const synth::SyntheticVideo video = synth::generate(scn);
  fs::create_directories(dir);
  VideoFiles files{dir / (scn.video + ".manifest.json"), dir / (scn.video + ".detections.jsonl"),
                   dir / (scn.video + ".annotations.jsonl")};
  const formats::Manifest manifest{scn.video, scn.dims.width(), scn.dims.height(),
                                   static_cast<std::int64_t>(scn.frames), scn.describe()};
  auto open = [](const fs::path &p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + p.string() + "'");
    return out;
  };
  {
    auto out = open(files.manifest);
    out << formats::emit_manifest(manifest);
  }
  {
    auto out = open(files.detections);
    for (std::size_t t = 0; t < video.det.size(); ++t) {
      formats::DetectionRecord rec{t, {}};
      if (video.det[t]) rec.boxes.push_back({*video.det[t], std::nullopt});
      out << formats::emit_detection(rec) << '\n';
    }
  }
  {
    auto out = open(*files.annotations);
    for (std::size_t t = 0; t < video.gt.size(); ++t) {
      out << formats::emit_annotation({t, video.gt[t]}) << '\n';
    }
  }
  return files;
}

/// Runs a command body and maps failures onto the documented exit codes.
inline int run(const std::function<void()> &body, std::ostream &err = std::cerr) {
  try {
    body();
    return static_cast<int>(ExitCode::kSuccess);
  } catch (const Error &e) {
    err << "ripagg: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception &e) {
    err << "ripagg: internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInvariant);
  }
}

}  // namespace ripagg::pipeline
