#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ripagg/error.hpp"
#include "ripagg/geometry.hpp"

namespace ripagg {

/// Window length and persistence threshold of the accumulation buffer.
/// Defaults are the published operating point.
class AggregationConfig {
 public:
  using Cell = std::uint16_t;
  static constexpr int kMaxWindow = std::numeric_limits<Cell>::max();

  AggregationConfig() = default;
  AggregationConfig(int window, int threshold)
      : window_(window), threshold_(threshold) {
    if (window < 1 || window > kMaxWindow) {
      throw ValidationError("window must be in [1, " +
                            std::to_string(kMaxWindow) + "], got " +
                            std::to_string(window));
    }
    if (threshold < 1 || threshold > window) {
      throw ValidationError("threshold must be in [1, window=" +
                            std::to_string(window) + "], got " +
                            std::to_string(threshold));
    }
  }

  int window() const noexcept { return window_; }
  int threshold() const noexcept { return threshold_; }

  friend bool operator==(const AggregationConfig &,
                         const AggregationConfig &) = default;

 private:
  int window_ = 60;
  int threshold_ = 50;
};

struct AggregatedDetection {
  std::size_t frame = 0;
  std::optional<BoundingBox> box;

  friend bool operator==(const AggregatedDetection &,
                         const AggregatedDetection &) = default;
};

/// Per-pixel persistence field over a fixed frame grid.
///
/// Every update saturates the cells under the detection box towards the
/// window length and, once the window is full, drains every other cell
/// towards zero. The aggregated detection is the tightest box around all
/// cells at or above the threshold.
///
/// Work per frame is proportional to the extent of non-zero cells rather than
/// the frame. The buffer keeps a conservative bounding rectangle of the
/// non-zero region and shrinks it during each extraction pass. Extraction is
/// skipped while no cell can have reached the threshold.
///
/// Not thread-safe; one logical thread updates a buffer at a time.
class AccumulationBuffer {
 public:
  using Cell = AggregationConfig::Cell;

  AccumulationBuffer(FrameDimensions dims, AggregationConfig cfg)
      : dims_(dims),
        cfg_(cfg),
        cells_(static_cast<std::size_t>(dims.pixel_count()), Cell{0}) {}

  const FrameDimensions &dims() const noexcept { return dims_; }
  const AggregationConfig &config() const noexcept { return cfg_; }
  std::size_t frames_processed() const noexcept { return frames_; }

  Cell at(std::int32_t x, std::int32_t y) const {
    return cells_[index(x, y)];
  }
  std::span<const Cell> cells() const noexcept { return cells_; }

  /// Upper bound on every cell value.
  int ceiling() const noexcept { return ceiling_; }

  /// Consumes the (already reduced) detection for the next frame and returns
  /// the aggregated detection for that frame. On error the buffer is left
  /// unchanged.
  AggregatedDetection update(const std::optional<BoundingBox> &detection) {
    if (detection && !detection->fits(dims_)) {
      throw DimensionError(frames_, "detection " + detection->describe() +
                                        " exceeds frame " +
                                        std::to_string(dims_.width()) + "x" +
                                        std::to_string(dims_.height()));
    }
    const std::size_t frame = frames_++;
    const Cell cap = static_cast<Cell>(cfg_.window());
    const bool warmup = frames_ < static_cast<std::size_t>(cfg_.window());

    if (warmup) {
      if (detection) {
        for (std::int32_t y = detection->y(); y < detection->bottom(); ++y) {
          raise(row(y) + detection->x(), row(y) + detection->right(), cap);
        }
        active_ = active_ ? hull(*active_, *detection) : *detection;
        ceiling_ = std::min<int>(ceiling_ + 1, cap);
      }
    } else {
      std::optional<BoundingBox> region = active_;
      if (detection) region = region ? hull(*region, *detection) : *detection;
      if (region) {
        for (std::int32_t y = region->y(); y < region->bottom(); ++y) {
          Cell *r = row(y);
          if (detection && y >= detection->y() && y < detection->bottom()) {
            drain(r + region->x(), r + detection->x());
            raise(r + detection->x(), r + detection->right(), cap);
            drain(r + detection->right(), r + region->right());
          } else {
            drain(r + region->x(), r + region->right());
          }
        }
      }
      active_ = region;
      ceiling_ = detection ? std::min<int>(ceiling_ + 1, cap)
                           : std::max(ceiling_ - 1, 0);
    }

    if (ceiling_ == 0) {
      active_.reset();
      return {frame, std::nullopt};
    }
    if (ceiling_ < cfg_.threshold()) return {frame, std::nullopt};
    ScanResult found = scan(cfg_.threshold());
    active_ = found.nonzero;
    return {frame, found.hits};
  }

  /// Tightest box around every cell whose value is at least `threshold`,
  /// taken over the union of all qualifying cells.
  std::optional<BoundingBox> extract(int threshold) const {
    if (threshold < 1) {
      throw ValidationError("extraction threshold must be >= 1, got " +
                            std::to_string(threshold));
    }
    return scan(threshold).hits;
  }
  std::optional<BoundingBox> extract() const { return extract(cfg_.threshold()); }

 private:
  struct ScanResult {
    std::optional<BoundingBox> hits;
    std::optional<BoundingBox> nonzero;
  };

  std::size_t index(std::int32_t x, std::int32_t y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width()) +
           static_cast<std::size_t>(x);
  }
  Cell *row(std::int32_t y) { return cells_.data() + index(0, y); }
  const Cell *row(std::int32_t y) const { return cells_.data() + index(0, y); }

  static void raise(Cell *first, Cell *last, Cell cap) {
    for (; first != last; ++first) *first = static_cast<Cell>(*first + (*first < cap));
  }
  static void drain(Cell *first, Cell *last) {
    for (; first != last; ++first) *first = static_cast<Cell>(*first - (*first > 0));
  }

  // Cells outside the active extent are zero, so only the extent is visited.
  ScanResult scan(int threshold) const {
    if (!active_) return {};
    const BoundingBox region = *active_;
    std::int32_t hit_x0 = INT32_MAX, hit_y0 = INT32_MAX, hit_x1 = -1, hit_y1 = -1;
    std::int32_t nz_x0 = INT32_MAX, nz_y0 = INT32_MAX, nz_x1 = -1, nz_y1 = -1;
    for (std::int32_t y = region.y(); y < region.bottom(); ++y) {
      const Cell *r = row(y);
      for (std::int32_t x = region.x(); x < region.right(); ++x) {
        const Cell v = r[x];
        if (v == 0) continue;
        nz_x0 = std::min(nz_x0, x);
        nz_x1 = std::max(nz_x1, x);
        nz_y0 = std::min(nz_y0, y);
        nz_y1 = y;
        if (v >= threshold) {
          hit_x0 = std::min(hit_x0, x);
          hit_x1 = std::max(hit_x1, x);
          hit_y0 = std::min(hit_y0, y);
          hit_y1 = y;
        }
      }
    }
    ScanResult out;
    if (nz_x1 >= 0) out.nonzero = BoundingBox::from_edges(nz_x0, nz_y0, nz_x1 + 1, nz_y1 + 1);
    if (hit_x1 >= 0) out.hits = BoundingBox::from_edges(hit_x0, hit_y0, hit_x1 + 1, hit_y1 + 1);
    return out;
  }

  FrameDimensions dims_;
  AggregationConfig cfg_;
  std::vector<Cell> cells_;
  std::size_t frames_ = 0;
  int ceiling_ = 0;
  std::optional<BoundingBox> active_;
};

/// Folds the buffer over a whole stream; one output record per input frame.
inline std::vector<AggregatedDetection> aggregate_stream(
    std::span<const std::optional<BoundingBox>> stream, FrameDimensions dims,
    AggregationConfig cfg) {
  AccumulationBuffer buffer(dims, cfg);
  std::vector<AggregatedDetection> out;
  out.reserve(stream.size());
  for (const auto &det : stream) out.push_back(buffer.update(det));
  return out;
}

}  // namespace ripagg
