// ripagg: temporal aggregation and evaluation of per-frame box detections.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ripagg/pipeline.hpp"
#include "ripagg/presets.hpp"

namespace {

using namespace ripagg;
namespace fs = std::filesystem;

struct Options {
  int window = 60;
  int threshold = 50;
  double iou = 0.3;
  bool iou_inclusive = false;
  std::optional<double> min_score;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string manifest;
  std::string detections;
  std::string annotations;
  std::string batch;
  std::string out;
  std::int64_t skip_frames = 0;
  bool score_warmup = false;
  bool with_aggregated = false;

  // synth
  std::string preset;
  bool list_presets = false;
  std::string video = "synthetic";
  int width = 320;
  int height = 240;
  std::size_t frames = 600;
  std::vector<int> box;
  double sigma = 5.0;
  double dropout = 0.1;
};

pipeline::RunConfig run_config(const Options &o) {
  pipeline::RunConfig cfg;
  cfg.aggregation = AggregationConfig(o.window, o.threshold);
  cfg.eval = EvalConfig(o.iou, o.iou_inclusive);
  if (o.min_score && !(*o.min_score >= 0.0 && *o.min_score <= 1.0)) {
    throw ValidationError("--min-score must be in [0, 1]");
  }
  cfg.min_score = o.min_score;
  cfg.seed = o.seed.value_or(0);
  cfg.jobs = std::max(1u, o.jobs);
  if (o.skip_frames < 0) throw ValidationError("--skip-frames must be >= 0");
  cfg.skip_frames = o.skip_frames;
  cfg.score_warmup = o.score_warmup;
  return cfg;
}

std::vector<pipeline::VideoFiles> inputs(const Options &o, bool need_annotations) {
  if (!o.batch.empty()) {
    if (!o.manifest.empty() || !o.detections.empty() || !o.annotations.empty()) {
      throw ValidationError("--batch cannot be combined with --manifest/--detections/--annotations");
    }
    return pipeline::discover_batch(o.batch, need_annotations);
  }
  if (o.manifest.empty() || o.detections.empty()) {
    throw ValidationError("either --batch or --manifest and --detections are required");
  }
  pipeline::VideoFiles v{o.manifest, o.detections, std::nullopt};
  if (need_annotations) {
    if (o.annotations.empty()) throw ValidationError("--annotations is required");
    v.annotations = fs::path(o.annotations);
  }
  return {v};
}

void write_output(const Options &o, const std::string &text) {
  if (o.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + o.out + "'");
  out << text;
}

void add_aggregation_flags(CLI::App *cmd, Options &o) {
  cmd->add_option("--window", o.window, "Accumulation window N in frames")->capture_default_str();
  cmd->add_option("--threshold", o.threshold, "Persistence threshold T in frames")->capture_default_str();
}

void add_eval_flags(CLI::App *cmd, Options &o) {
  cmd->add_option("--iou", o.iou, "IoU a detection must exceed to count as correct")->capture_default_str();
  cmd->add_flag("--iou-inclusive", o.iou_inclusive, "Count IoU equal to the threshold as correct");
}

void add_input_flags(CLI::App *cmd, Options &o, bool annotations) {
  cmd->add_option("--manifest", o.manifest, "Video manifest (JSON)");
  cmd->add_option("--detections", o.detections, "Detection stream (JSONL)");
  if (annotations) cmd->add_option("--annotations", o.annotations, "Ground-truth stream (JSONL)");
  cmd->add_option("--batch", o.batch, "Directory of <video>.manifest.json / .detections.jsonl"
                                      " / .annotations.jsonl triples");
  cmd->add_option("--jobs", o.jobs, "Videos processed in parallel in batch mode")->capture_default_str();
  cmd->add_option("--min-score", o.min_score, "Drop boxes whose score is below this value");
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
}

int run_synth(const Options &o) {
  return pipeline::run([&] {
    if (o.list_presets) {
      std::ostringstream text;
      for (const auto &p : synth::presets()) text << p.video << '\t' << p.describe() << '\n';
      write_output(o, text.str());
      return;
    }
    if (o.out.empty()) throw ValidationError("synth needs --out DIR");
    std::vector<synth::JitterScenario> scenarios;
    if (o.preset == "all") {
      scenarios = synth::presets();
    } else if (!o.preset.empty()) {
      scenarios.push_back(synth::preset(o.preset));
    } else {
      std::optional<BoundingBox> gt;
      if (!o.box.empty()) {
        if (o.box.size() != 4) throw ValidationError("--box takes x,y,w,h");
        gt = BoundingBox(o.box[0], o.box[1], o.box[2], o.box[3]);
      }
      scenarios.push_back(synth::JitterScenario::constant(
          o.video, FrameDimensions(o.width, o.height), o.frames, gt, o.sigma, o.dropout, 0));
    }
    for (auto &s : scenarios) {
      if (o.seed) s.seed = *o.seed;
      if (s.frames == 0) throw ValidationError("--frames must be >= 1");
      const auto files = pipeline::write_synthetic(s, o.out);
      std::cerr << "wrote " << files.manifest.string() << '\n';
    }
  });
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Temporal aggregation and IoU evaluation of per-frame detections"};
  app.require_subcommand(1);
  Options o;

  auto *aggregate = app.add_subcommand("aggregate", "Smooth a detection stream with the accumulation buffer");
  add_aggregation_flags(aggregate, o);
  aggregate->add_option("--manifest", o.manifest, "Video manifest (JSON)")->required();
  aggregate->add_option("--detections", o.detections, "Detection stream (JSONL)")->required();
  aggregate->add_option("--min-score", o.min_score, "Drop boxes whose score is below this value");
  aggregate->add_option("--out", o.out, "Output file (default: stdout)");

  auto *evaluate = app.add_subcommand("evaluate", "Per-frame IoU accuracy against ground truth");
  add_eval_flags(evaluate, o);
  add_input_flags(evaluate, o, true);
  evaluate->add_option("--skip-frames", o.skip_frames, "Leading frames excluded from scoring")->capture_default_str();

  auto *stability = app.add_subcommand("stability", "Consecutive-frame area and center changes");
  add_input_flags(stability, o, false);
  add_aggregation_flags(stability, o);
  stability->add_flag("--aggregate", o.with_aggregated, "Also report the aggregated stream");

  auto *compare = app.add_subcommand("compare", "Raw against aggregated accuracy and stability");
  add_aggregation_flags(compare, o);
  add_eval_flags(compare, o);
  add_input_flags(compare, o, true);
  compare->add_flag("--score-warmup", o.score_warmup,
                    "Also score the first N-1 frames, before the window is full");

  auto *synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic video (manifest, detections, annotations)");
  synth_cmd->add_option("--preset", o.preset, "Shipped scenario name, or 'all'");
  synth_cmd->add_flag("--list", o.list_presets, "List shipped presets");
  synth_cmd->add_option("--seed", o.seed, "Random seed (overrides the preset seed)");
  synth_cmd->add_option("--video", o.video, "Video name")->capture_default_str();
  synth_cmd->add_option("--width", o.width, "Frame width")->capture_default_str();
  synth_cmd->add_option("--height", o.height, "Frame height")->capture_default_str();
  synth_cmd->add_option("--frames", o.frames, "Frame count")->capture_default_str();
  synth_cmd->add_option("--box", o.box, "Ground-truth box x,y,w,h (omit for a negative video)")->delimiter(',');
  synth_cmd->add_option("--sigma", o.sigma, "Edge jitter standard deviation in pixels")->capture_default_str();
  synth_cmd->add_option("--dropout", o.dropout, "Probability a frame has no detection")->capture_default_str();
  synth_cmd->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }

  if (*aggregate) {
    return pipeline::run([&] {
      const auto cfg = run_config(o);
      const auto manifest = formats::read_manifest(o.manifest);
      auto in = pipeline::open_input(o.detections);
      std::ostringstream text;
      pipeline::aggregate_file(in, manifest, cfg, text, o.detections);
      write_output(o, text.str());
    });
  }
  if (*evaluate) {
    return pipeline::run([&] {
      write_output(o, formats::emit_report(pipeline::evaluate(inputs(o, true), run_config(o))));
    });
  }
  if (*stability) {
    return pipeline::run([&] {
      write_output(o, formats::emit_report(
                          pipeline::stability_report(inputs(o, false), run_config(o), o.with_aggregated)));
    });
  }
  if (*compare) {
    return pipeline::run([&] {
      write_output(o, formats::emit_report(pipeline::compare(inputs(o, true), run_config(o))));
    });
  }
  return run_synth(o);
}
