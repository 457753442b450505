#pragma once

// Shared generators and brute-force oracles for the test suites. Nothing in
// here calls the geometry arithmetic it is used to check.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "ripagg/geometry.hpp"

namespace ripagg::testing {

using Pixel = std::pair<std::int32_t, std::int32_t>;

inline std::set<Pixel> pixels(const BoundingBox &b) {
  std::set<Pixel> out;
  for (std::int32_t y = b.y(); y < b.y() + b.h(); ++y) {
    for (std::int32_t x = b.x(); x < b.x() + b.w(); ++x) out.insert({x, y});
  }
  return out;
}

inline std::int64_t brute_area(const BoundingBox &b) {
  return static_cast<std::int64_t>(pixels(b).size());
}

struct BruteOverlap {
  std::int64_t intersection;
  std::int64_t union_area;
};

inline BruteOverlap brute_overlap(const BoundingBox &a, const BoundingBox &b) {
  const auto pa = pixels(a);
  const auto pb = pixels(b);
  std::int64_t inter = 0;
  for (const auto &p : pa) inter += pb.count(p);
  return {inter, static_cast<std::int64_t>(pa.size() + pb.size()) - inter};
}

inline BoundingBox random_box(std::mt19937_64 &rng, std::int32_t width, std::int32_t height) {
  std::uniform_int_distribution<std::int32_t> xs(0, width - 1);
  std::uniform_int_distribution<std::int32_t> ys(0, height - 1);
  const std::int32_t x = xs(rng);
  const std::int32_t y = ys(rng);
  std::uniform_int_distribution<std::int32_t> ws(1, width - x);
  std::uniform_int_distribution<std::int32_t> hs(1, height - y);
  return {x, y, ws(rng), hs(rng)};
}

/// Random per-frame detections: each frame has a box with probability `p_box`.
inline std::vector<std::optional<BoundingBox>> random_stream(std::mt19937_64 &rng, std::size_t frames,
                                                             std::int32_t width, std::int32_t height,
                                                             double p_box = 0.7) {
  std::bernoulli_distribution present(p_box);
  std::vector<std::optional<BoundingBox>> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    if (present(rng)) {
      out.push_back(random_box(rng, width, height));
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

/// Random stream whose boxes wander around a base box, so persistence builds up.
inline std::vector<std::optional<BoundingBox>> clustered_stream(std::mt19937_64 &rng, std::size_t frames,
                                                                std::int32_t width, std::int32_t height,
                                                                double p_box = 0.8) {
  const BoundingBox base = random_box(rng, width, height);
  std::bernoulli_distribution present(p_box);
  std::uniform_int_distribution<std::int32_t> jitter(-3, 3);
  std::vector<std::optional<BoundingBox>> out;
  for (std::size_t t = 0; t < frames; ++t) {
    if (!present(rng)) {
      out.push_back(std::nullopt);
      continue;
    }
    const std::int32_t l = std::clamp(base.x() + jitter(rng), 0, width - 1);
    const std::int32_t top = std::clamp(base.y() + jitter(rng), 0, height - 1);
    const std::int32_t r = std::clamp(base.x() + base.w() + jitter(rng), l + 1, width);
    const std::int32_t b = std::clamp(base.y() + base.h() + jitter(rng), top + 1, height);
    out.push_back(BoundingBox(l, top, r - l, b - top));
  }
  return out;
}

}  // namespace ripagg::testing
