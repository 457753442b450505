#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ripagg/aggregation.hpp"
#include "ripagg/error.hpp"
#include "ripagg/geometry.hpp"

namespace ripagg::synth {

/// Name of the random stream recorded in generated manifests. Uniforms take
/// the top 53 bits of std::mt19937_64; normals use the cosine branch of
/// Box-Muller on two fresh uniforms.
inline constexpr const char *kRngName = "mt19937_64/box-muller-cos";

/// Uniform and Gaussian draws whose bit patterns only depend on the seed.
/// std::normal_distribution is implementation-defined and is not used.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// The ground-truth box from `first_frame` until the next segment starts;
/// no box means the phenomenon is absent.
struct GtSegment {
  std::size_t first_frame = 0;
  std::optional<BoundingBox> box;
};

struct JitterScenario {
  std::string video = "synthetic";
  FrameDimensions dims{64, 64};
  std::size_t frames = 0;
  std::vector<GtSegment> script;  // sorted by first_frame, first one at 0
  double sigma = 0.0;
  double dropout = 0.0;
  std::uint64_t seed = 0;

  static JitterScenario constant(std::string video, FrameDimensions dims,
                                 std::size_t frames, std::optional<BoundingBox> box,
                                 double sigma, double dropout, std::uint64_t seed) {
    JitterScenario s{std::move(video), dims, frames, {{0, box}}, sigma, dropout, seed};
    s.validate();
    return s;
  }

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw ValidationError("sigma must be a finite value >= 0");
    }
    if (!(dropout >= 0.0 && dropout <= 1.0)) {
      throw ValidationError("dropout must be in [0, 1]");
    }
    if (script.empty() || script.front().first_frame != 0) {
      throw ValidationError("ground-truth script must start at frame 0");
    }
    for (std::size_t i = 0; i < script.size(); ++i) {
      if (i > 0 && script[i].first_frame <= script[i - 1].first_frame) {
        throw ValidationError("ground-truth script segments must be strictly increasing");
      }
      if (script[i].box && !script[i].box->fits(dims)) {
        throw ValidationError("ground-truth box " + script[i].box->describe() +
                              " does not fit the frame");
      }
    }
  }

  std::optional<BoundingBox> gt_at(std::size_t frame) const {
    std::optional<BoundingBox> box;
    for (const auto &seg : script) {
      if (seg.first_frame > frame) break;
      box = seg.box;
    }
    return box;
  }

  std::string describe() const {
    return std::string("synth rng=") + kRngName + " seed=" + std::to_string(seed) +
           " sigma=" + std::to_string(sigma) + " dropout=" + std::to_string(dropout);
  }
};

struct SyntheticVideo {
  std::vector<std::optional<BoundingBox>> gt;
  std::vector<std::optional<BoundingBox>> det;
};

/// Per frame: one uniform for dropout, then four normals for the left, top,
/// right and bottom edges. Draws are consumed on every frame, box or not, so
/// a frame's noise only depends on the seed and its index.
inline SyntheticVideo generate(const JitterScenario &scn) {
  scn.validate();
  PortableRng rng(scn.seed);
  SyntheticVideo out;
  out.gt.reserve(scn.frames);
  out.det.reserve(scn.frames);
  const std::int32_t width = scn.dims.width();
  const std::int32_t height = scn.dims.height();
  for (std::size_t t = 0; t < scn.frames; ++t) {
    const auto gt = scn.gt_at(t);
    const bool keep = rng.uniform() >= scn.dropout;
    double noise[4];
    for (double &n : noise) n = rng.normal();
    out.gt.push_back(gt);
    if (!gt || !keep) {
      out.det.push_back(std::nullopt);
      continue;
    }
    auto jitter = [&](std::int32_t edge, double z) {
      return static_cast<std::int64_t>(edge) + std::llround(scn.sigma * z);
    };
    const std::int64_t left = std::clamp<std::int64_t>(jitter(gt->x(), noise[0]), 0, width - 1);
    const std::int64_t top = std::clamp<std::int64_t>(jitter(gt->y(), noise[1]), 0, height - 1);
    const std::int64_t right = std::clamp<std::int64_t>(jitter(gt->right(), noise[2]), left + 1, width);
    const std::int64_t bottom = std::clamp<std::int64_t>(jitter(gt->bottom(), noise[3]), top + 1, height);
    out.det.push_back(BoundingBox::from_edges(
        static_cast<std::int32_t>(left), static_cast<std::int32_t>(top),
        static_cast<std::int32_t>(right), static_cast<std::int32_t>(bottom)));
  }
  return out;
}

/// Literal per-pixel accumulation buffer with no shortcuts, used as the
/// equivalence oracle for AccumulationBuffer.
class ReferenceBuffer {
 public:
  ReferenceBuffer(FrameDimensions dims, AggregationConfig cfg)
      : dims_(dims), cfg_(cfg),
        cells_(static_cast<std::size_t>(dims.pixel_count()), 0) {}

  int at(std::int32_t x, std::int32_t y) const {
    return cells_[static_cast<std::size_t>(y) * dims_.width() + x];
  }
  std::size_t frames_processed() const noexcept { return frames_; }

  AggregatedDetection update(const std::optional<BoundingBox> &det) {
    if (det && !det->fits(dims_)) {
      throw DimensionError(frames_, "detection " + det->describe() + " exceeds frame");
    }
    const std::size_t frame = frames_;
    ++frames_;
    const bool window_full = frames_ >= static_cast<std::size_t>(cfg_.window());
    for (std::int32_t y = 0; y < dims_.height(); ++y) {
      for (std::int32_t x = 0; x < dims_.width(); ++x) {
        int &v = cells_[static_cast<std::size_t>(y) * dims_.width() + x];
        if (det && det->contains(x, y)) {
          v = std::min(v + 1, cfg_.window());
        } else if (window_full) {
          v = std::max(v - 1, 0);
        }
      }
    }
    return {frame, extract(cfg_.threshold())};
  }

  std::optional<BoundingBox> extract(int threshold) const {
    std::int32_t x0 = dims_.width(), y0 = dims_.height(), x1 = -1, y1 = -1;
    for (std::int32_t y = 0; y < dims_.height(); ++y) {
      for (std::int32_t x = 0; x < dims_.width(); ++x) {
        if (at(x, y) >= threshold) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
    }
    if (x1 < 0) return std::nullopt;
    return BoundingBox::from_edges(x0, y0, x1 + 1, y1 + 1);
  }

 private:
  FrameDimensions dims_;
  AggregationConfig cfg_;
  std::vector<int> cells_;
  std::size_t frames_ = 0;
};

inline std::vector<AggregatedDetection> reference_aggregate(
    std::span<const std::optional<BoundingBox>> stream, FrameDimensions dims,
    AggregationConfig cfg) {
  ReferenceBuffer buffer(dims, cfg);
  std::vector<AggregatedDetection> out;
  out.reserve(stream.size());
  for (const auto &det : stream) out.push_back(buffer.update(det));
  return out;
}

}  // namespace ripagg::synth
