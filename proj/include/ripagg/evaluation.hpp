#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ripagg/error.hpp"
#include "ripagg/geometry.hpp"

namespace ripagg {

/// Per-frame correctness rule. A frame with both boxes is correct when
/// iou(gt, det) is above `iou_threshold` (or at/above it when `inclusive`).
class EvalConfig {
 public:
  EvalConfig() = default;
  explicit EvalConfig(double iou_threshold, bool inclusive = false)
      : iou_threshold_(iou_threshold), inclusive_(inclusive) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
      throw ValidationError("iou threshold must be in (0, 1), got " +
                            std::to_string(iou_threshold));
    }
  }

  double iou_threshold() const noexcept { return iou_threshold_; }
  bool inclusive() const noexcept { return inclusive_; }

  bool passes(double iou_value) const noexcept {
    return inclusive_ ? iou_value >= iou_threshold_ : iou_value > iou_threshold_;
  }

 private:
  double iou_threshold_ = 0.3;
  bool inclusive_ = false;
};

struct FrameVerdict {
  std::size_t frame = 0;
  bool correct = false;
  std::optional<double> iou;
};

inline FrameVerdict judge_frame(const std::optional<BoundingBox> &gt,
                                const std::optional<BoundingBox> &det,
                                const EvalConfig &cfg, std::size_t frame = 0) {
  if (gt && det) {
    const double value = iou(*gt, *det);
    return {frame, cfg.passes(value), value};
  }
  // Negative frame: correct only when nothing was reported.
  return {frame, !gt && !det, std::nullopt};
}

inline std::vector<FrameVerdict> judge_stream(
    std::span<const std::optional<BoundingBox>> gt,
    std::span<const std::optional<BoundingBox>> det, const EvalConfig &cfg) {
  if (gt.size() != det.size()) {
    throw AlignmentError(std::min(gt.size(), det.size()),
                         "ground truth has " + std::to_string(gt.size()) +
                             " frames, detections have " +
                             std::to_string(det.size()));
  }
  std::vector<FrameVerdict> out;
  out.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    out.push_back(judge_frame(gt[i], det[i], cfg, i));
  }
  return out;
}

struct VideoAccuracy {
  std::string video;
  std::int64_t total_frames = 0;
  std::int64_t correct_frames = 0;

  double accuracy() const noexcept {
    return total_frames == 0
               ? 0.0
               : static_cast<double>(correct_frames) / static_cast<double>(total_frames);
  }
};

inline VideoAccuracy video_accuracy(std::string video,
                                    std::span<const std::optional<BoundingBox>> gt,
                                    std::span<const std::optional<BoundingBox>> det,
                                    const EvalConfig &cfg) {
  const auto verdicts = judge_stream(gt, det, cfg);
  if (verdicts.empty()) {
    throw ValidationError("video '" + video + "' has no frames to score");
  }
  VideoAccuracy out{std::move(video), static_cast<std::int64_t>(verdicts.size()), 0};
  for (const auto &v : verdicts) out.correct_frames += v.correct ? 1 : 0;
  return out;
}

struct AccuracySummary {
  std::size_t videos = 0;
  std::int64_t total_frames = 0;
  std::int64_t correct_frames = 0;
  /// Unweighted mean of per-video accuracies (the per-table "average" row).
  double macro = 0.0;
  /// Pooled correct frames over pooled frames.
  double micro = 0.0;
};

/// Videos are folded in name order so the result does not depend on input order.
inline AccuracySummary summarize(std::span<const VideoAccuracy> per_video) {
  if (per_video.empty()) throw ValidationError("cannot summarize an empty video list");
  std::vector<const VideoAccuracy *> sorted;
  sorted.reserve(per_video.size());
  for (const auto &v : per_video) sorted.push_back(&v);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto *a, const auto *b) { return a->video < b->video; });

  AccuracySummary out;
  out.videos = sorted.size();
  double sum = 0.0;
  for (const auto *v : sorted) {
    out.total_frames += v->total_frames;
    out.correct_frames += v->correct_frames;
    sum += v->accuracy();
  }
  out.macro = sum / static_cast<double>(out.videos);
  out.micro = out.total_frames == 0 ? 0.0
                                    : static_cast<double>(out.correct_frames) /
                                          static_cast<double>(out.total_frames);
  return out;
}

/// Consecutive-frame box change statistics.
struct StabilityReport {
  std::int64_t pair_count = 0;
  std::int64_t gap_count = 0;
  std::vector<std::int64_t> area_deltas;
  std::vector<double> center_deltas;
  double mean_area_delta = 0.0;
  double median_area_delta = 0.0;
  double fraction_zero_area_delta = 0.0;
  double mean_center_delta = 0.0;
};

/// A pair contributes deltas only when both frames carry a box; any other
/// consecutive pair counts as a gap. All summary statistics are 0 when there
/// are no pairs.
inline StabilityReport stability(std::span<const std::optional<BoundingBox>> stream) {
  StabilityReport out;
  for (std::size_t t = 1; t < stream.size(); ++t) {
    const auto &prev = stream[t - 1];
    const auto &cur = stream[t];
    if (!prev || !cur) {
      ++out.gap_count;
      continue;
    }
    out.area_deltas.push_back(std::abs(area(*cur) - area(*prev)));
    const Point2 a = center(*prev);
    const Point2 b = center(*cur);
    out.center_deltas.push_back(std::hypot(b.x - a.x, b.y - a.y));
  }
  out.pair_count = static_cast<std::int64_t>(out.area_deltas.size());
  if (out.pair_count == 0) return out;

  const double n = static_cast<double>(out.pair_count);
  std::int64_t area_sum = 0;
  std::int64_t zeros = 0;
  for (auto d : out.area_deltas) {
    area_sum += d;
    zeros += d == 0 ? 1 : 0;
  }
  double center_sum = 0.0;
  for (auto d : out.center_deltas) center_sum += d;

  std::vector<std::int64_t> sorted = out.area_deltas;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  out.median_area_delta = sorted.size() % 2 == 1
                              ? static_cast<double>(sorted[mid])
                              : (static_cast<double>(sorted[mid - 1]) +
                                 static_cast<double>(sorted[mid])) / 2.0;
  out.mean_area_delta = static_cast<double>(area_sum) / n;
  out.fraction_zero_area_delta = static_cast<double>(zeros) / n;
  out.mean_center_delta = center_sum / n;
  return out;
}

}  // namespace ripagg
