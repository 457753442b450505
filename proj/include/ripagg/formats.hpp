#pragma once

// Line-delimited wire formats shared with detector backends.
//
//   manifest     one JSON object: {"schema":"ripagg/1","video":..,"width":..,
//                "height":..,"frame_count":..,"source":..}
//   detections   one JSON object per line, frames contiguous from 0:
//                {"frame":0,"boxes":[{"x":..,"y":..,"w":..,"h":..,"score":..}]}
//   annotations  one JSON object per line, frames contiguous from 0:
//                {"frame":0,"box":{"x":..,"y":..,"w":..,"h":..}} or "box":null

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ripagg/error.hpp"
#include "ripagg/geometry.hpp"

namespace ripagg::formats {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr std::string_view kSchema = "ripagg/1";

struct Manifest {
  std::string video;
  std::int32_t width = 1;
  std::int32_t height = 1;
  std::int64_t frame_count = 1;
  std::string source;

  FrameDimensions dims() const { return {width, height}; }

  friend bool operator==(const Manifest &, const Manifest &) = default;
};

struct ScoredBox {
  BoundingBox box;
  std::optional<double> score;

  friend bool operator==(const ScoredBox &, const ScoredBox &) = default;
};

struct DetectionRecord {
  std::size_t frame = 0;
  std::vector<ScoredBox> boxes;

  friend bool operator==(const DetectionRecord &, const DetectionRecord &) = default;
};

struct AnnotationRecord {
  std::size_t frame = 0;
  std::optional<BoundingBox> box;

  friend bool operator==(const AnnotationRecord &, const AnnotationRecord &) = default;
};

struct DetectionStream {
  Manifest manifest;
  std::vector<DetectionRecord> records;
};

struct AnnotationStream {
  Manifest manifest;
  std::vector<AnnotationRecord> records;
};

struct ParseOptions {
  // When false the caller checks the frame count itself (e.g. to report an
  // alignment error between two streams first).
  bool check_frame_count = true;
};

namespace detail {

inline std::int64_t require_int(const Json &obj, const char *field,
                                const std::string &src, std::size_t line,
                                const std::string &where) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError(src, line, where + " is missing field '" + field + "'");
  }
  if (!it->is_number_integer()) {
    throw ParseError(src, line, where + " field '" + field + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

inline BoundingBox parse_box(const Json &obj, const FrameDimensions &dims,
                             const std::string &src, std::size_t line,
                             const std::string &where) {
  if (!obj.is_object()) throw ParseError(src, line, where + " must be an object");
  const std::int64_t x = require_int(obj, "x", src, line, where);
  const std::int64_t y = require_int(obj, "y", src, line, where);
  const std::int64_t w = require_int(obj, "w", src, line, where);
  const std::int64_t h = require_int(obj, "h", src, line, where);
  if (x < 0) throw ParseError(src, line, where + " field 'x' must be >= 0, got " + std::to_string(x));
  if (y < 0) throw ParseError(src, line, where + " field 'y' must be >= 0, got " + std::to_string(y));
  if (w < 1) throw ParseError(src, line, where + " field 'w' must be >= 1, got " + std::to_string(w));
  if (h < 1) throw ParseError(src, line, where + " field 'h' must be >= 1, got " + std::to_string(h));
  if (x + w > dims.width()) {
    throw ParseError(src, line, where + " x+w=" + std::to_string(x + w) +
                                    " exceeds frame width " + std::to_string(dims.width()));
  }
  if (y + h > dims.height()) {
    throw ParseError(src, line, where + " y+h=" + std::to_string(y + h) +
                                    " exceeds frame height " + std::to_string(dims.height()));
  }
  return {static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
          static_cast<std::int32_t>(w), static_cast<std::int32_t>(h)};
}

inline OrderedJson box_json(const BoundingBox &b) {
  OrderedJson j;
  j["x"] = b.x();
  j["y"] = b.y();
  j["w"] = b.w();
  j["h"] = b.h();
  return j;
}

inline Json parse_line(const std::string &text, const std::string &src, std::size_t line) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ParseError(src, line, std::string("malformed line: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(src, line, "record must be a JSON object");
  return j;
}

// Shared frame-contiguity bookkeeping for the two per-frame readers.
class FrameLineReader {
 public:
  FrameLineReader(std::istream &in, const Manifest &manifest, std::string src,
                  ParseOptions options)
      : in_(in), manifest_(manifest), src_(std::move(src)), options_(options) {}

  // Returns the next record object with its validated frame index, or
  // nullopt at end of input.
  std::optional<std::pair<std::size_t, Json>> next() {
    std::string text;
    if (!std::getline(in_, text)) {
      finish();
      return std::nullopt;
    }
    ++line_;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    Json j = parse_line(text, src_, line_);
    const std::int64_t frame = require_int(j, "frame", src_, line_, "record");
    if (frame != static_cast<std::int64_t>(frames_)) {
      throw ParseError(src_, line_, "frame " + std::to_string(frame) +
                                        " is not contiguous (expected " +
                                        std::to_string(frames_) + ")");
    }
    if (options_.check_frame_count && frame >= manifest_.frame_count) {
      throw ParseError(src_, line_, "frame " + std::to_string(frame) +
                                        " exceeds manifest frame_count " +
                                        std::to_string(manifest_.frame_count));
    }
    return std::make_pair(frames_++, std::move(j));
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t frames() const noexcept { return frames_; }
  const std::string &source() const noexcept { return src_; }
  FrameDimensions dims() const { return manifest_.dims(); }

 private:
  void finish() {
    if (options_.check_frame_count &&
        static_cast<std::int64_t>(frames_) != manifest_.frame_count) {
      throw ParseError(src_, line_, "stream has " + std::to_string(frames_) +
                                        " frames but manifest frame_count is " +
                                        std::to_string(manifest_.frame_count));
    }
  }

  std::istream &in_;
  Manifest manifest_;
  std::string src_;
  ParseOptions options_;
  std::size_t line_ = 0;
  std::size_t frames_ = 0;
};

}  // namespace detail

inline Manifest parse_manifest(std::istream &in, const std::string &src = "manifest") {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw ParseError(src, 1, std::string("malformed manifest: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(src, 1, "manifest must be a JSON object");
  const auto schema = j.find("schema");
  if (schema == j.end() || !schema->is_string() || schema->get<std::string>() != kSchema) {
    throw ParseError(src, 1, "manifest field 'schema' must be \"" + std::string(kSchema) + "\"");
  }
  const auto video = j.find("video");
  if (video == j.end() || !video->is_string() || video->get<std::string>().empty()) {
    throw ParseError(src, 1, "manifest field 'video' must be a non-empty string");
  }
  Manifest m;
  m.video = video->get<std::string>();
  const std::int64_t width = detail::require_int(j, "width", src, 1, "manifest");
  const std::int64_t height = detail::require_int(j, "height", src, 1, "manifest");
  m.frame_count = detail::require_int(j, "frame_count", src, 1, "manifest");
  if (width < 1 || width > INT32_MAX) throw ParseError(src, 1, "manifest field 'width' must be >= 1");
  if (height < 1 || height > INT32_MAX) throw ParseError(src, 1, "manifest field 'height' must be >= 1");
  if (m.frame_count < 1) throw ParseError(src, 1, "manifest field 'frame_count' must be >= 1");
  m.width = static_cast<std::int32_t>(width);
  m.height = static_cast<std::int32_t>(height);
  if (const auto source = j.find("source"); source != j.end()) {
    if (!source->is_string()) throw ParseError(src, 1, "manifest field 'source' must be a string");
    m.source = source->get<std::string>();
  }
  return m;
}

inline std::string emit_manifest(const Manifest &m) {
  OrderedJson j;
  j["schema"] = kSchema;
  j["video"] = m.video;
  j["width"] = m.width;
  j["height"] = m.height;
  j["frame_count"] = m.frame_count;
  j["source"] = m.source;
  return j.dump(2) + "\n";
}

inline Manifest read_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest '" + path + "'");
  return parse_manifest(in, path);
}

/// Streaming reader; holds one record at a time.
class DetectionReader {
 public:
  DetectionReader(std::istream &in, const Manifest &manifest,
                  std::string src = "detections", ParseOptions options = {})
      : lines_(in, manifest, std::move(src), options) {}

  std::optional<DetectionRecord> next() {
    auto item = lines_.next();
    if (!item) return std::nullopt;
    auto &[frame, j] = *item;
    const auto boxes = j.find("boxes");
    if (boxes == j.end() || !boxes->is_array()) {
      throw ParseError(lines_.source(), lines_.line(), "record field 'boxes' must be an array");
    }
    DetectionRecord rec{frame, {}};
    rec.boxes.reserve(boxes->size());
    for (std::size_t i = 0; i < boxes->size(); ++i) {
      const Json &bj = (*boxes)[i];
      const std::string where = "frame " + std::to_string(frame) + " box " + std::to_string(i);
      BoundingBox box = detail::parse_box(bj, lines_.dims(), lines_.source(), lines_.line(), where);
      std::optional<double> score;
      if (const auto s = bj.find("score"); s != bj.end() && !s->is_null()) {
        if (!s->is_number()) {
          throw ParseError(lines_.source(), lines_.line(), where + " field 'score' must be a number");
        }
        const double v = s->get<double>();
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ParseError(lines_.source(), lines_.line(), where + " field 'score' must be in [0, 1]");
        }
        score = v;
      }
      rec.boxes.push_back({box, score});
    }
    return rec;
  }

  std::size_t frames() const noexcept { return lines_.frames(); }

 private:
  detail::FrameLineReader lines_;
};

class AnnotationReader {
 public:
  AnnotationReader(std::istream &in, const Manifest &manifest,
                   std::string src = "annotations", ParseOptions options = {})
      : lines_(in, manifest, std::move(src), options) {}

  std::optional<AnnotationRecord> next() {
    auto item = lines_.next();
    if (!item) return std::nullopt;
    auto &[frame, j] = *item;
    const auto box = j.find("box");
    if (box == j.end()) {
      throw ParseError(lines_.source(), lines_.line(), "record is missing field 'box'");
    }
    if (box->is_array()) {
      throw ParseError(lines_.source(), lines_.line(),
                       "at most one ground-truth box per frame is supported");
    }
    AnnotationRecord rec{frame, std::nullopt};
    if (!box->is_null()) {
      rec.box = detail::parse_box(*box, lines_.dims(), lines_.source(), lines_.line(),
                                  "frame " + std::to_string(frame) + " box");
    }
    return rec;
  }

  std::size_t frames() const noexcept { return lines_.frames(); }

 private:
  detail::FrameLineReader lines_;
};

inline DetectionStream parse_detections(std::istream &in, const Manifest &manifest,
                                        const std::string &src = "detections",
                                        ParseOptions options = {}) {
  DetectionStream out{manifest, {}};
  DetectionReader reader(in, manifest, src, options);
  while (auto rec = reader.next()) out.records.push_back(std::move(*rec));
  return out;
}

inline AnnotationStream parse_annotations(std::istream &in, const Manifest &manifest,
                                          const std::string &src = "annotations",
                                          ParseOptions options = {}) {
  AnnotationStream out{manifest, {}};
  AnnotationReader reader(in, manifest, src, options);
  while (auto rec = reader.next()) out.records.push_back(std::move(*rec));
  return out;
}

/// One line, without the trailing newline.
inline std::string emit_detection(const DetectionRecord &rec) {
  OrderedJson j;
  j["frame"] = rec.frame;
  j["boxes"] = OrderedJson::array();
  for (const auto &sb : rec.boxes) {
    OrderedJson bj = detail::box_json(sb.box);
    if (sb.score) bj["score"] = *sb.score;
    j["boxes"].push_back(std::move(bj));
  }
  return j.dump();
}

inline std::string emit_annotation(const AnnotationRecord &rec) {
  OrderedJson j;
  j["frame"] = rec.frame;
  j["box"] = rec.box ? detail::box_json(*rec.box) : OrderedJson(nullptr);
  return j.dump();
}

/// Largest surviving box of a record. Boxes without a score always survive
/// the optional score floor.
inline std::optional<BoundingBox> reduce(const DetectionRecord &rec,
                                         std::optional<double> min_score = std::nullopt) {
  std::vector<BoundingBox> kept;
  kept.reserve(rec.boxes.size());
  for (const auto &sb : rec.boxes) {
    if (min_score && sb.score && *sb.score < *min_score) continue;
    kept.push_back(sb.box);
  }
  return largest_box(kept);
}

inline std::vector<std::optional<BoundingBox>> reduce_all(
    const DetectionStream &stream, std::optional<double> min_score = std::nullopt) {
  std::vector<std::optional<BoundingBox>> out;
  out.reserve(stream.records.size());
  for (const auto &rec : stream.records) out.push_back(reduce(rec, min_score));
  return out;
}

inline std::vector<std::optional<BoundingBox>> boxes_of(const AnnotationStream &stream) {
  std::vector<std::optional<BoundingBox>> out;
  out.reserve(stream.records.size());
  for (const auto &rec : stream.records) out.push_back(rec.box);
  return out;
}

}  // namespace ripagg::formats
