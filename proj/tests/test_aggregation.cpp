#include <catch_amalgamated.hpp>

#include <algorithm>
#include <deque>
#include <random>
#include <vector>

#include "ripagg/aggregation.hpp"
#include "ripagg/synth.hpp"
#include "support.hpp"

using namespace ripagg;
using Stream = std::vector<std::optional<BoundingBox>>;

namespace {

int max_cell(const AccumulationBuffer &buf) {
  const auto cells = buf.cells();
  return cells.empty() ? 0 : *std::max_element(cells.begin(), cells.end());
}

}  // namespace

TEST_CASE("config validation", "[aggregation]") {
  const AggregationConfig defaults;
  CHECK(defaults.window() == 60);
  CHECK(defaults.threshold() == 50);
  CHECK_NOTHROW(AggregationConfig(1, 1));
  CHECK_THROWS_AS(AggregationConfig(0, 1), ValidationError);
  CHECK_THROWS_AS(AggregationConfig(5, 0), ValidationError);
  CHECK_THROWS_AS(AggregationConfig(5, 6), ValidationError);
}

TEST_CASE("a new buffer is all zero", "[aggregation]") {
  const AccumulationBuffer buf(FrameDimensions(64, 64), AggregationConfig(60, 50));
  CHECK(buf.cells().size() == 4096);
  CHECK(max_cell(buf) == 0);
  CHECK(buf.frames_processed() == 0);

  const AccumulationBuffer tiny(FrameDimensions(1, 1), AggregationConfig(1, 1));
  CHECK(tiny.cells().size() == 1);
  CHECK(tiny.at(0, 0) == 0);
  CHECK(static_cast<std::size_t>(max_cell(tiny)) == tiny.frames_processed());
}

TEST_CASE("update: repeated box reaches the threshold", "[aggregation]") {
  const FrameDimensions dims(8, 8);
  const AggregationConfig cfg(3, 2);
  const BoundingBox a(0, 0, 4, 4);
  const Stream stream{a, a};

  const auto expected = synth::reference_aggregate(stream, dims, cfg);
  REQUIRE_FALSE(expected[0].box.has_value());
  REQUIRE(expected[1].box == a);

  AccumulationBuffer buf(dims, cfg);
  CHECK_FALSE(buf.update(a).box.has_value());
  const auto out = buf.update(a);
  CHECK(out.frame == 1);
  CHECK(out.box == a);
  for (std::int32_t y = 0; y < 8; ++y) {
    for (std::int32_t x = 0; x < 8; ++x) CHECK(buf.at(x, y) == (a.contains(x, y) ? 2 : 0));
  }
}

TEST_CASE("update: an empty warmup frame changes nothing", "[aggregation]") {
  const FrameDimensions dims(8, 8);
  const AggregationConfig cfg(3, 2);
  const BoundingBox a(0, 0, 4, 4);
  const Stream stream{a, std::nullopt};

  const auto expected = synth::reference_aggregate(stream, dims, cfg);
  REQUIRE_FALSE(expected[1].box.has_value());

  AccumulationBuffer buf(dims, cfg);
  buf.update(a);
  const auto out = buf.update(std::nullopt);
  CHECK_FALSE(out.box.has_value());
  CHECK(buf.at(0, 0) == 1);
  CHECK(max_cell(buf) == 1);
}

TEST_CASE("update: overlap of two boxes", "[aggregation]") {
  const FrameDimensions dims(8, 4);
  const AggregationConfig cfg(3, 2);
  const Stream stream{BoundingBox(0, 0, 4, 4), BoundingBox(2, 0, 4, 4)};

  const auto expected = synth::reference_aggregate(stream, dims, cfg);
  REQUIRE(expected[1].box == BoundingBox(2, 0, 2, 4));

  const auto out = aggregate_stream(stream, dims, cfg);
  CHECK(out == expected);
}

TEST_CASE("update: empty streams never emit", "[aggregation]") {
  const Stream empty(250, std::nullopt);
  for (const auto &a : aggregate_stream(empty, FrameDimensions(16, 16), AggregationConfig(10, 3))) {
    CHECK_FALSE(a.box.has_value());
  }
  CHECK(aggregate_stream({}, FrameDimensions(16, 16), AggregationConfig()).empty());
}

TEST_CASE("update: steady state decrements outside the box", "[aggregation]") {
  const FrameDimensions dims(4, 1);
  AccumulationBuffer buf(dims, AggregationConfig(2, 1));
  buf.update(BoundingBox(0, 0, 2, 1));  // warmup: left half = 1
  buf.update(BoundingBox(2, 0, 2, 1));  // full window: left drains, right rises
  CHECK(buf.at(0, 0) == 0);
  CHECK(buf.at(1, 0) == 0);
  CHECK(buf.at(2, 0) == 1);
  buf.update(BoundingBox(2, 0, 2, 1));
  buf.update(BoundingBox(2, 0, 2, 1));
  CHECK(buf.at(2, 0) == 2);  // capped at N
  buf.update(std::nullopt);
  CHECK(buf.at(2, 0) == 1);
  CHECK(buf.at(0, 0) == 0);  // floored at 0
}

TEST_CASE("update rejects out-of-bounds detections and keeps its state", "[aggregation]") {
  AccumulationBuffer buf(FrameDimensions(10, 10), AggregationConfig(3, 2));
  buf.update(BoundingBox(0, 0, 5, 5));
  try {
    buf.update(BoundingBox(8, 8, 5, 5));
    FAIL("expected a dimension error");
  } catch (const DimensionError &e) {
    CHECK(e.frame() == 1);
    CHECK(e.code() == ExitCode::kValidation);
  }
  CHECK(buf.frames_processed() == 1);
  CHECK(buf.at(0, 0) == 1);
}

TEST_CASE("aggregate_stream reports the offending frame", "[aggregation]") {
  const Stream stream{std::nullopt, BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 20, 2)};
  try {
    aggregate_stream(stream, FrameDimensions(10, 10), AggregationConfig(3, 2));
    FAIL("expected a dimension error");
  } catch (const DimensionError &e) {
    CHECK(e.frame() == 2);
  }
}

TEST_CASE("extract", "[aggregation]") {
  const FrameDimensions dims(16, 16);

  AccumulationBuffer below(dims, AggregationConfig(10, 5));
  for (int i = 0; i < 4; ++i) below.update(BoundingBox(2, 2, 3, 3));
  CHECK_FALSE(below.extract().has_value());

  AccumulationBuffer rect(FrameDimensions(32, 32), AggregationConfig(10, 3));
  for (int i = 0; i < 3; ++i) rect.update(BoundingBox(10, 10, 5, 5));
  CHECK(rect.extract() == BoundingBox(10, 10, 5, 5));

  // Two isolated qualifying cells yield one covering box.
  AccumulationBuffer split(dims, AggregationConfig(10, 1));
  split.update(BoundingBox(0, 0, 1, 1));
  split.update(BoundingBox(9, 9, 1, 1));
  CHECK(split.extract() == BoundingBox(0, 0, 10, 10));

  CHECK_THROWS_AS(split.extract(0), ValidationError);
}

TEST_CASE("extract at other thresholds reads the same field", "[aggregation]") {
  AccumulationBuffer buf(FrameDimensions(16, 16), AggregationConfig(10, 4));
  buf.update(BoundingBox(0, 0, 8, 8));
  buf.update(BoundingBox(4, 4, 8, 8));
  CHECK(buf.extract(1) == BoundingBox(0, 0, 12, 12));
  CHECK(buf.extract(2) == BoundingBox(4, 4, 4, 4));
  CHECK_FALSE(buf.extract(3).has_value());
}

TEST_CASE("constant box at the published parameters", "[aggregation]") {
  const FrameDimensions dims(64, 48);
  const BoundingBox b(10, 12, 20, 15);
  const Stream stream(120, b);
  const auto out = aggregate_stream(stream, dims, AggregationConfig());
  for (std::size_t t = 1; t <= out.size(); ++t) {
    if (t < 50) {
      REQUIRE_FALSE(out[t - 1].box.has_value());
    } else {
      REQUIRE(out[t - 1].box == b);
    }
  }
  CHECK(out == synth::reference_aggregate(stream, dims, AggregationConfig()));
}

TEST_CASE("buffer invariants hold on random streams", "[aggregation][property]") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> windows(1, 12);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = windows(rng);
    const int t_thr = std::uniform_int_distribution<int>(1, n)(rng);
    const AggregationConfig cfg(n, t_thr);
    const FrameDimensions dims(24, 20);
    const auto stream = trial % 2 ? testing::random_stream(rng, 80, 24, 20)
                                  : testing::clustered_stream(rng, 80, 24, 20);
    AccumulationBuffer buf(dims, cfg);
    std::vector<AccumulationBuffer::Cell> previous(buf.cells().begin(), buf.cells().end());
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const std::size_t t = i + 1;
      const auto out = buf.update(stream[i]);
      const auto cells = buf.cells();
      for (std::size_t c = 0; c < cells.size(); ++c) {
        REQUIRE(cells[c] <= n);
        REQUIRE(cells[c] <= t);
        if (t <= static_cast<std::size_t>(n - 1)) REQUIRE(cells[c] >= previous[c]);
      }
      REQUIRE(max_cell(buf) <= buf.ceiling());
      if (t < static_cast<std::size_t>(t_thr)) REQUIRE_FALSE(out.box.has_value());
      if (out.box) REQUIRE(out.box->fits(dims));
      previous.assign(cells.begin(), cells.end());
    }
  }
}

TEST_CASE("qualifying cells lie inside the last N-T+1 boxes", "[aggregation][property]") {
  std::mt19937_64 rng(2024);
  auto check = [&](const AggregationConfig &cfg, const Stream &stream, FrameDimensions dims) {
    const std::size_t support = static_cast<std::size_t>(cfg.window() - cfg.threshold() + 1);
    AccumulationBuffer buf(dims, cfg);
    std::deque<std::optional<BoundingBox>> recent;
    for (const auto &det : stream) {
      const auto out = buf.update(det);
      recent.push_back(det);
      if (recent.size() > support) recent.pop_front();
      std::optional<BoundingBox> cover;
      for (const auto &r : recent) {
        if (r) cover = cover ? hull(*cover, *r) : *r;
      }
      for (std::int32_t y = 0; y < dims.height(); ++y) {
        for (std::int32_t x = 0; x < dims.width(); ++x) {
          if (buf.at(x, y) < cfg.threshold()) continue;
          const bool inside = std::any_of(recent.begin(), recent.end(), [&](const auto &r) {
            return r && r->contains(x, y);
          });
          REQUIRE(inside);
        }
      }
      if (out.box) {
        REQUIRE(cover.has_value());
        REQUIRE(hull(*cover, *out.box) == *cover);
        const bool touches = std::any_of(recent.begin(), recent.end(), [&](const auto &r) {
          return r && overlap(*r, *out.box).intersection > 0;
        });
        REQUIRE(touches);
      }
    }
  };
  for (int trial = 0; trial < 30; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    const int t_thr = std::uniform_int_distribution<int>(1, n)(rng);
    check(AggregationConfig(n, t_thr), testing::clustered_stream(rng, 100, 20, 20), FrameDimensions(20, 20));
  }
  // Published parameters: an 11-frame support window.
  for (int trial = 0; trial < 3; ++trial) {
    check(AggregationConfig(60, 50), testing::clustered_stream(rng, 200, 24, 24, 0.95), FrameDimensions(24, 24));
  }
}

TEST_CASE("steady state reproduces a repeated box exactly", "[aggregation][property]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const int t_thr = std::uniform_int_distribution<int>(1, n)(rng);
    const AggregationConfig cfg(n, t_thr);
    const BoundingBox b = testing::random_box(rng, 30, 30);
    // Anything disjoint from b first, so b starts from zero.
    Stream stream;
    const std::size_t prefix = std::uniform_int_distribution<std::size_t>(0, 20)(rng);
    for (std::size_t i = 0; i < prefix; ++i) stream.push_back(std::nullopt);
    for (int i = 0; i < t_thr; ++i) stream.push_back(b);
    const auto out = aggregate_stream(stream, FrameDimensions(30, 30), cfg);
    REQUIRE(out.back().box == b);
  }
}

TEST_CASE("identical inputs give identical outputs", "[aggregation][property]") {
  std::mt19937_64 rng(8);
  const auto stream = testing::clustered_stream(rng, 300, 40, 30);
  const auto a = aggregate_stream(stream, FrameDimensions(40, 30), AggregationConfig(20, 12));
  const auto b = aggregate_stream(stream, FrameDimensions(40, 30), AggregationConfig(20, 12));
  CHECK(a == b);
}

TEST_CASE("optimized buffer equals the per-pixel reference", "[aggregation][oracle]") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    const int t_thr = std::uniform_int_distribution<int>(1, n)(rng);
    const AggregationConfig cfg(n, t_thr);
    const FrameDimensions dims(32, 24);
    const auto stream = trial % 3 == 0 ? testing::random_stream(rng, 120, 32, 24)
                                       : testing::clustered_stream(rng, 120, 32, 24);
    AccumulationBuffer fast(dims, cfg);
    synth::ReferenceBuffer slow(dims, cfg);
    for (const auto &det : stream) {
      REQUIRE(fast.update(det) == slow.update(det));
      for (std::int32_t y = 0; y < dims.height(); ++y) {
        for (std::int32_t x = 0; x < dims.width(); ++x) REQUIRE(fast.at(x, y) == slow.at(x, y));
      }
      for (int thr = 1; thr <= n; ++thr) REQUIRE(fast.extract(thr) == slow.extract(thr));
    }
  }
}
