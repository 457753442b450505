#pragma once

#include <algorithm>
#include <climits>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "ripagg/error.hpp"

namespace ripagg {

/// Size of the pixel grid a stream lives on.
class FrameDimensions {
 public:
  FrameDimensions(std::int32_t width, std::int32_t height)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ValidationError("frame dimensions must be at least 1x1, got " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
    }
  }

  std::int32_t width() const noexcept { return width_; }
  std::int32_t height() const noexcept { return height_; }
  std::int64_t pixel_count() const noexcept {
    return std::int64_t{width_} * height_;
  }

  friend bool operator==(const FrameDimensions &,
                         const FrameDimensions &) = default;

 private:
  std::int32_t width_;
  std::int32_t height_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned integer pixel rectangle. Covers the half-open pixel set
/// [x, x+w) x [y, y+h) with the origin at the top-left corner.
class BoundingBox {
 public:
  BoundingBox(std::int32_t x, std::int32_t y, std::int32_t w, std::int32_t h)
      : x_(x), y_(y), w_(w), h_(h) {
    if (w < 1 || h < 1) {
      throw ValidationError("box " + describe() + " has zero area (w and h must be >= 1)");
    }
    if (x < 0 || y < 0) {
      throw ValidationError("box " + describe() + " has a negative origin");
    }
    if (std::int64_t{x} + w > INT32_MAX || std::int64_t{y} + h > INT32_MAX) {
      throw ValidationError("box " + describe() + " overflows the coordinate range");
    }
  }

  /// Box with half-open corners [left, right) x [top, bottom).
  static BoundingBox from_edges(std::int32_t left, std::int32_t top,
                                std::int32_t right, std::int32_t bottom) {
    return BoundingBox(left, top, right - left, bottom - top);
  }

  std::int32_t x() const noexcept { return x_; }
  std::int32_t y() const noexcept { return y_; }
  std::int32_t w() const noexcept { return w_; }
  std::int32_t h() const noexcept { return h_; }
  std::int32_t right() const noexcept { return x_ + w_; }
  std::int32_t bottom() const noexcept { return y_ + h_; }

  bool fits(const FrameDimensions &dims) const noexcept {
    return right() <= dims.width() && bottom() <= dims.height();
  }

  bool contains(std::int32_t px, std::int32_t py) const noexcept {
    return px >= x_ && px < right() && py >= y_ && py < bottom();
  }

  std::string describe() const {
    return "(" + std::to_string(x_) + "," + std::to_string(y_) + "," +
           std::to_string(w_) + "," + std::to_string(h_) + ")";
  }

  friend bool operator==(const BoundingBox &, const BoundingBox &) = default;

 private:
  std::int32_t x_;
  std::int32_t y_;
  std::int32_t w_;
  std::int32_t h_;
};

inline std::int64_t area(const BoundingBox &b) noexcept {
  return std::int64_t{b.w()} * b.h();
}

inline Point2 center(const BoundingBox &b) noexcept {
  return {b.x() + b.w() / 2.0, b.y() + b.h() / 2.0};
}

/// Exact pixel counts behind an IoU value.
struct Overlap {
  std::int64_t intersection = 0;
  std::int64_t union_area = 0;

  double ratio() const noexcept {
    return static_cast<double>(intersection) / static_cast<double>(union_area);
  }
};

inline Overlap overlap(const BoundingBox &a, const BoundingBox &b) noexcept {
  const std::int64_t iw =
      std::int64_t{std::min(a.right(), b.right())} - std::max(a.x(), b.x());
  const std::int64_t ih =
      std::int64_t{std::min(a.bottom(), b.bottom())} - std::max(a.y(), b.y());
  const std::int64_t inter = (iw > 0 && ih > 0) ? iw * ih : 0;
  return {inter, area(a) + area(b) - inter};
}

inline double iou(const BoundingBox &a, const BoundingBox &b) noexcept {
  return overlap(a, b).ratio();
}

/// Smallest box covering both inputs.
inline BoundingBox hull(const BoundingBox &a, const BoundingBox &b) {
  return BoundingBox::from_edges(std::min(a.x(), b.x()), std::min(a.y(), b.y()),
                                 std::max(a.right(), b.right()),
                                 std::max(a.bottom(), b.bottom()));
}

/// The box of maximal area; the earliest one wins ties.
inline std::optional<BoundingBox> largest_box(std::span<const BoundingBox> boxes) {
  std::optional<BoundingBox> best;
  for (const auto &b : boxes) {
    if (!best || area(b) > area(*best)) best = b;
  }
  return best;
}

}  // namespace ripagg
