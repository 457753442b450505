#pragma once

// Report documents: per-video rows with one cell per column (e.g. "raw" and
// "aggregated"), plus per-column averages. Ratios are written with exactly
// three decimals; emission is byte-stable for equal documents.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ripagg/error.hpp"
#include "ripagg/evaluation.hpp"
#include "ripagg/formats.hpp"

namespace ripagg::formats {

/// A ratio held as integer thousandths, so a parsed value compares equal to
/// the one that was emitted.
class Fixed3 {
 public:
  constexpr Fixed3() = default;
  static constexpr Fixed3 from_milli(std::int64_t milli) { return Fixed3(milli); }
  static Fixed3 from_double(double v) {
    if (!std::isfinite(v)) throw InvariantError("non-finite ratio in report");
    return Fixed3(std::llround(v * 1000.0));
  }
  /// Round-half-up of num/den to thousandths, computed exactly.
  static Fixed3 from_fraction(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num < 0) throw InvariantError("invalid fraction in report");
    return Fixed3((num * 2000 + den) / (2 * den));
  }

  constexpr std::int64_t milli() const noexcept { return milli_; }
  double value() const noexcept { return static_cast<double>(milli_) / 1000.0; }

  std::string str() const {
    const std::int64_t mag = milli_ < 0 ? -milli_ : milli_;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%lld.%03lld", milli_ < 0 ? "-" : "",
                  static_cast<long long>(mag / 1000), static_cast<long long>(mag % 1000));
    return buf;
  }

  friend constexpr bool operator==(Fixed3, Fixed3) = default;
  friend constexpr auto operator<=>(Fixed3, Fixed3) = default;

 private:
  constexpr explicit Fixed3(std::int64_t milli) : milli_(milli) {}
  std::int64_t milli_ = 0;
};

struct AccuracyCell {
  std::int64_t total_frames = 0;
  std::int64_t correct_frames = 0;

  Fixed3 accuracy() const { return Fixed3::from_fraction(correct_frames, total_frames); }

  friend bool operator==(const AccuracyCell &, const AccuracyCell &) = default;
};

struct StabilityCell {
  std::int64_t pair_count = 0;
  std::int64_t gap_count = 0;
  Fixed3 mean_area_delta;
  Fixed3 median_area_delta;
  Fixed3 fraction_zero_area_delta;
  Fixed3 mean_center_delta;

  static StabilityCell from(const StabilityReport &r) {
    return {r.pair_count,
            r.gap_count,
            Fixed3::from_double(r.mean_area_delta),
            Fixed3::from_double(r.median_area_delta),
            Fixed3::from_double(r.fraction_zero_area_delta),
            Fixed3::from_double(r.mean_center_delta)};
  }

  friend bool operator==(const StabilityCell &, const StabilityCell &) = default;
};

struct ReportCell {
  std::optional<AccuracyCell> accuracy;
  std::optional<StabilityCell> stability;

  friend bool operator==(const ReportCell &, const ReportCell &) = default;
};

struct ReportRow {
  std::string video;
  std::int64_t frames = 0;
  std::vector<ReportCell> cells;  // one per Report::columns entry

  friend bool operator==(const ReportRow &, const ReportRow &) = default;
};

struct ReportAverage {
  std::int64_t videos = 0;
  std::int64_t total_frames = 0;
  std::int64_t correct_frames = 0;
  Fixed3 macro;
  Fixed3 micro;

  static ReportAverage from(const AccuracySummary &s) {
    return {static_cast<std::int64_t>(s.videos), s.total_frames, s.correct_frames,
            Fixed3::from_double(s.macro),
            Fixed3::from_fraction(s.correct_frames, s.total_frames)};
  }

  friend bool operator==(const ReportAverage &, const ReportAverage &) = default;
};

struct ReportParams {
  std::optional<std::int64_t> window;
  std::optional<std::int64_t> threshold;
  std::optional<Fixed3> iou_threshold;
  std::optional<bool> iou_inclusive;
  std::optional<double> min_score;
  /// First scored frame, 0-based.
  std::optional<std::int64_t> scored_from;

  friend bool operator==(const ReportParams &, const ReportParams &) = default;
};

struct Report {
  std::string command;
  ReportParams params;
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;                     // sorted by video name
  std::vector<std::optional<ReportAverage>> averages;  // one per column

  friend bool operator==(const Report &, const Report &) = default;
};

namespace detail {

// Minimal pretty printer: nlohmann cannot emit 1.000, so Fixed3 values are
// written as raw tokens.
class ReportWriter {
 public:
  std::string take() { return std::move(out_); }

  void open(char c) {
    out_ += c;
    ++depth_;
    first_ = true;
  }
  void close(char c) {
    --depth_;
    if (!first_) newline();
    out_ += c;
    first_ = false;
  }
  void key(const std::string &k) {
    item();
    out_ += Json(k).dump();
    out_ += ": ";
  }
  void element() { item(); }
  void raw(const std::string &token) { out_ += token; first_ = false; }
  void text(const std::string &s) { raw(Json(s).dump()); }
  void integer(std::int64_t v) { raw(std::to_string(v)); }
  void fixed(Fixed3 v) { raw(v.str()); }
  void number(double v) { raw(Json(v).dump()); }
  void boolean(bool v) { raw(v ? "true" : "false"); }

 private:
  void item() {
    if (!first_) out_ += ',';
    newline();
    first_ = true;
  }
  void newline() {
    out_ += '\n';
    out_.append(static_cast<std::size_t>(depth_) * 2, ' ');
  }

  std::string out_;
  int depth_ = 0;
  bool first_ = true;
};

inline void write_stability(ReportWriter &w, const StabilityCell &s) {
  w.open('{');
  w.key("pair_count"); w.integer(s.pair_count);
  w.key("gap_count"); w.integer(s.gap_count);
  w.key("mean_area_delta"); w.fixed(s.mean_area_delta);
  w.key("median_area_delta"); w.fixed(s.median_area_delta);
  w.key("fraction_zero_area_delta"); w.fixed(s.fraction_zero_area_delta);
  w.key("mean_center_delta"); w.fixed(s.mean_center_delta);
  w.close('}');
}

inline const Json &field(const Json &obj, const char *name, const std::string &where) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError("report", 1, where + " is missing field '" + name + "'");
  return *it;
}

inline std::int64_t int_field(const Json &obj, const char *name, const std::string &where) {
  const Json &v = field(obj, name, where);
  if (!v.is_number_integer()) {
    throw ParseError("report", 1, where + " field '" + name + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

inline Fixed3 fixed_field(const Json &obj, const char *name, const std::string &where) {
  const Json &v = field(obj, name, where);
  if (!v.is_number()) throw ParseError("report", 1, where + " field '" + name + "' must be a number");
  return Fixed3::from_double(v.get<double>());
}

inline StabilityCell read_stability(const Json &j, const std::string &where) {
  return {int_field(j, "pair_count", where), int_field(j, "gap_count", where),
          fixed_field(j, "mean_area_delta", where), fixed_field(j, "median_area_delta", where),
          fixed_field(j, "fraction_zero_area_delta", where),
          fixed_field(j, "mean_center_delta", where)};
}

}  // namespace detail

inline std::string emit_report(const Report &r) {
  if (r.averages.size() != r.columns.size()) {
    throw InvariantError("report averages do not match its columns");
  }
  for (const auto &c : r.columns) {
    if (c == "video" || c == "frames" || c.empty()) {
      throw InvariantError("report column name '" + c + "' is reserved");
    }
  }
  detail::ReportWriter w;
  w.open('{');
  w.key("schema"); w.text(std::string(kSchema));
  w.key("command"); w.text(r.command);

  w.key("params");
  w.open('{');
  if (r.params.window) { w.key("window"); w.integer(*r.params.window); }
  if (r.params.threshold) { w.key("threshold"); w.integer(*r.params.threshold); }
  if (r.params.iou_threshold) { w.key("iou_threshold"); w.fixed(*r.params.iou_threshold); }
  if (r.params.iou_inclusive) { w.key("iou_inclusive"); w.boolean(*r.params.iou_inclusive); }
  if (r.params.min_score) { w.key("min_score"); w.number(*r.params.min_score); }
  if (r.params.scored_from) { w.key("scored_from"); w.integer(*r.params.scored_from); }
  w.close('}');

  w.key("columns");
  w.open('[');
  for (const auto &c : r.columns) { w.element(); w.text(c); }
  w.close(']');

  w.key("videos");
  w.open('[');
  for (const auto &row : r.rows) {
    if (row.cells.size() != r.columns.size()) {
      throw InvariantError("report row '" + row.video + "' does not match its columns");
    }
    w.element();
    w.open('{');
    w.key("video"); w.text(row.video);
    w.key("frames"); w.integer(row.frames);
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      const ReportCell &cell = row.cells[c];
      w.key(r.columns[c]);
      w.open('{');
      if (cell.accuracy) {
        w.key("total_frames"); w.integer(cell.accuracy->total_frames);
        w.key("correct_frames"); w.integer(cell.accuracy->correct_frames);
        w.key("accuracy"); w.fixed(cell.accuracy->accuracy());
      }
      if (cell.stability) {
        w.key("stability");
        detail::write_stability(w, *cell.stability);
      }
      w.close('}');
    }
    w.close('}');
  }
  w.close(']');

  w.key("average");
  w.open('{');
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    const auto &avg = r.averages[c];
    if (!avg) continue;
    w.key(r.columns[c]);
    w.open('{');
    w.key("videos"); w.integer(avg->videos);
    w.key("total_frames"); w.integer(avg->total_frames);
    w.key("correct_frames"); w.integer(avg->correct_frames);
    w.key("macro_accuracy"); w.fixed(avg->macro);
    w.key("micro_accuracy"); w.fixed(avg->micro);
    w.close('}');
  }
  w.close('}');
  w.close('}');
  return w.take() + "\n";
}

inline Report parse_report(std::istream &in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw ParseError("report", 1, std::string("malformed report: ") + e.what());
  }
  using detail::field;
  using detail::fixed_field;
  using detail::int_field;
  if (!j.is_object()) throw ParseError("report", 1, "report must be a JSON object");
  if (field(j, "schema", "report") != kSchema) {
    throw ParseError("report", 1, "report schema must be \"" + std::string(kSchema) + "\"");
  }
  Report r;
  r.command = field(j, "command", "report").get<std::string>();

  const Json &p = field(j, "params", "report");
  if (p.contains("window")) r.params.window = int_field(p, "window", "params");
  if (p.contains("threshold")) r.params.threshold = int_field(p, "threshold", "params");
  if (p.contains("iou_threshold")) r.params.iou_threshold = fixed_field(p, "iou_threshold", "params");
  if (p.contains("iou_inclusive")) r.params.iou_inclusive = p.at("iou_inclusive").get<bool>();
  if (p.contains("min_score")) r.params.min_score = p.at("min_score").get<double>();
  if (p.contains("scored_from")) r.params.scored_from = int_field(p, "scored_from", "params");

  for (const auto &c : field(j, "columns", "report")) r.columns.push_back(c.get<std::string>());

  for (const auto &vj : field(j, "videos", "report")) {
    ReportRow row;
    row.video = field(vj, "video", "video row").get<std::string>();
    const std::string where = "video '" + row.video + "'";
    row.frames = int_field(vj, "frames", where);
    for (const auto &col : r.columns) {
      const Json &cj = field(vj, col.c_str(), where);
      ReportCell cell;
      if (cj.contains("total_frames")) {
        AccuracyCell acc{int_field(cj, "total_frames", where), int_field(cj, "correct_frames", where)};
        if (fixed_field(cj, "accuracy", where) != acc.accuracy()) {
          throw ParseError("report", 1, where + " accuracy does not equal correct_frames/total_frames");
        }
        cell.accuracy = acc;
      }
      if (cj.contains("stability")) cell.stability = detail::read_stability(cj.at("stability"), where);
      row.cells.push_back(std::move(cell));
    }
    r.rows.push_back(std::move(row));
  }

  const Json &aj = field(j, "average", "report");
  for (const auto &col : r.columns) {
    if (!aj.contains(col)) {
      r.averages.emplace_back();
      continue;
    }
    const Json &a = aj.at(col);
    const std::string where = "average '" + col + "'";
    r.averages.push_back(ReportAverage{int_field(a, "videos", where),
                                       int_field(a, "total_frames", where),
                                       int_field(a, "correct_frames", where),
                                       fixed_field(a, "macro_accuracy", where),
                                       fixed_field(a, "micro_accuracy", where)});
  }
  return r;
}

}  // namespace ripagg::formats
