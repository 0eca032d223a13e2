#pragma once

// KITTI object label and calibration text formats.
//
// Label line: type truncated occluded alpha left top right bottom h w l x y z
// rotation_y [score]. Location is the bottom-face center in camera
// coordinates, angles are radians.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "det3d/core.hpp"
#include "det3d/geometry3d.hpp"
#include "det3d/synthgen.hpp"

namespace det3d::kitti {

struct KittiLabelRecord {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};        // left, top, right, bottom
  std::array<double, 3> dimensions{};  // h, w, l
  std::array<double, 3> location{};    // x, y, z
  double rotation_y = 0.0;
  std::optional<double> score;

  friend bool operator==(const KittiLabelRecord&, const KittiLabelRecord&) = default;
};

struct KittiCalib {
  std::array<double, 12> p2{};

  friend bool operator==(const KittiCalib&, const KittiCalib&) = default;
};

inline constexpr std::array<const char*, 16> kFieldNames{
    "type",         "truncated",    "occluded",     "alpha",
    "bbox.left",    "bbox.top",     "bbox.right",   "bbox.bottom",
    "dimensions.h", "dimensions.w", "dimensions.l", "location.x",
    "location.y",   "location.z",   "rotation_y",   "score"};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

inline double to_double(std::string_view tok, const char* field, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(where(line_no) + "field '" + field + "' is not a finite number: '" +
                         std::string(tok) + "'",
                     line_no);
  }
  return v;
}

inline int to_int(std::string_view tok, const char* field, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(where(line_no) + "field '" + field + "' is not an integer: '" +
                         std::string(tok) + "'",
                     line_no);
  }
  return v;
}

inline void append_fixed(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " %.6f", v);
  out += buf;
}

// The value a label field holds after a write and re-parse.
inline double round_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::strtod(buf, nullptr);
}

}  // namespace detail

inline KittiLabelRecord parse_kitti_label(std::string_view line, std::size_t line_no = 1) {
  const auto tok = detail::split_ws(line);
  if (tok.size() != 15 && tok.size() != 16) {
    throw ParseError(detail::where(line_no) + "expected 15 or 16 fields, got " +
                         std::to_string(tok.size()),
                     line_no);
  }
  KittiLabelRecord r;
  r.type = std::string(tok[0]);
  r.truncated = detail::to_double(tok[1], kFieldNames[1], line_no);
  r.occluded = detail::to_int(tok[2], kFieldNames[2], line_no);
  r.alpha = detail::to_double(tok[3], kFieldNames[3], line_no);
  for (std::size_t i = 0; i < 4; ++i) r.bbox[i] = detail::to_double(tok[4 + i], kFieldNames[4 + i], line_no);
  for (std::size_t i = 0; i < 3; ++i)
    r.dimensions[i] = detail::to_double(tok[8 + i], kFieldNames[8 + i], line_no);
  for (std::size_t i = 0; i < 3; ++i)
    r.location[i] = detail::to_double(tok[11 + i], kFieldNames[11 + i], line_no);
  r.rotation_y = detail::to_double(tok[14], kFieldNames[14], line_no);
  if (tok.size() == 16) r.score = detail::to_double(tok[15], kFieldNames[15], line_no);

  if (!(r.truncated >= 0.0 && r.truncated <= 1.0)) {
    throw ParseError(detail::where(line_no) + "field 'truncated' outside [0, 1]", line_no);
  }
  if (r.occluded < 0 || r.occluded > 3) {
    throw ParseError(detail::where(line_no) + "field 'occluded' outside {0, 1, 2, 3}", line_no);
  }
  if (r.bbox[0] > r.bbox[2] || r.bbox[1] > r.bbox[3]) {
    throw ParseError(detail::where(line_no) + "bbox is not well-ordered", line_no);
  }
  return r;
}

// Fixed six-decimal rendering; write(parse(write(r))) is byte-identical.
inline std::string write_kitti_label(const KittiLabelRecord& r) {
  if (r.type.empty() || r.type.find_first_of(" \t\r\n") != std::string::npos) {
    throw DomainError("kitti: type must be a non-empty token without whitespace");
  }
  std::string out = r.type;
  detail::append_fixed(out, r.truncated);
  out += ' ';
  out += std::to_string(r.occluded);
  detail::append_fixed(out, r.alpha);
  for (double v : r.bbox) detail::append_fixed(out, v);
  for (double v : r.dimensions) detail::append_fixed(out, v);
  for (double v : r.location) detail::append_fixed(out, v);
  detail::append_fixed(out, r.rotation_y);
  if (r.score) detail::append_fixed(out, *r.score);
  return out;
}

// One record per non-blank line; line numbers in errors are 1-based.
inline std::vector<KittiLabelRecord> parse_kitti_label_file(std::string_view text) {
  std::vector<KittiLabelRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    const std::string_view line = text.substr(pos, end - pos);
    if (!detail::split_ws(line).empty()) out.push_back(parse_kitti_label(line, line_no));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

inline std::string write_kitti_label_file(const std::vector<KittiLabelRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += write_kitti_label(r);
    out += '\n';
  }
  return out;
}

inline KittiCalib parse_kitti_calib(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    const auto tok = detail::split_ws(text.substr(pos, end - pos));
    pos = end + 1;
    if (tok.empty() || tok[0] != "P2:") continue;
    if (tok.size() != 13) {
      throw ParseError(detail::where(line_no) + "P2 needs 12 values, got " +
                           std::to_string(tok.size() - 1),
                       line_no);
    }
    KittiCalib calib;
    for (std::size_t i = 0; i < 12; ++i) calib.p2[i] = detail::to_double(tok[i + 1], "P2", line_no);
    return calib;
  }
  throw ParseError("calib: no P2 line found");
}

// P0..P3 all carry the camera matrix; R0_rect is the identity.
inline std::string write_kitti_calib(const KittiCalib& calib) {
  std::string out;
  char buf[64];
  for (int cam = 0; cam < 4; ++cam) {
    out += "P" + std::to_string(cam) + ":";
    for (double v : calib.p2) {
      std::snprintf(buf, sizeof buf, " %.12e", v);
      out += buf;
    }
    out += '\n';
  }
  out += "R0_rect:";
  for (int i = 0; i < 9; ++i) {
    std::snprintf(buf, sizeof buf, " %.12e", (i % 4 == 0) ? 1.0 : 0.0);
    out += buf;
  }
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Scene conversion
// ---------------------------------------------------------------------------

// Wraps radians into [-pi, pi).
inline double normalize_radians(double rad) { return deg_to_rad(normalize_angle(rad_to_deg(rad))); }

// Lossy: elevation, roll and all sweep metadata are dropped.
inline KittiLabelRecord to_kitti_record(const synth::SceneObject& obj, const ClassTaxonomy& taxonomy,
                                        std::optional<double> score = std::nullopt) {
  const Box3D& b = obj.box3d;
  KittiLabelRecord r;
  r.type = taxonomy.name(b.class_id);
  r.truncated = 0.0;
  r.occluded = 0;
  r.rotation_y = deg_to_rad(b.orientation.azimuth);
  // Alpha comes from the values as written so a re-import reproduces it.
  const double ry = detail::round_fixed(r.rotation_y);
  r.alpha = normalize_radians(ry - std::atan2(detail::round_fixed(b.center.x), detail::round_fixed(b.center.z)));
  r.bbox = {obj.box2d.x_min, obj.box2d.y_min, obj.box2d.x_max, obj.box2d.y_max};
  r.dimensions = {b.dims.h, b.dims.w, b.dims.l};
  r.location = {b.center.x, b.center.y + 0.5 * b.dims.h, b.center.z};
  r.score = score;
  return r;
}

inline synth::SceneObject from_kitti_record(const KittiLabelRecord& r,
                                            const ClassTaxonomy& taxonomy) {
  const auto cls = taxonomy.index_of(r.type);
  if (!cls) throw ValidationError("kitti: unknown class '" + r.type + "'");
  const double score = r.score.value_or(1.0);
  const Dims3 dims{r.dimensions[1], r.dimensions[0], r.dimensions[2]};
  const Vec3 center{r.location[0], r.location[1] - 0.5 * dims.h, r.location[2]};
  const Box3D b3(center, dims, {rad_to_deg(r.rotation_y), 0.0, 0.0}, *cls, score);
  const Box2D b2(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3], *cls, score);
  return {b3, b2};
}

struct KittiExport {
  std::string label;
  std::string calib;
};

inline KittiExport convert_scene_to_kitti(const synth::SceneSample& sample,
                                          const ClassTaxonomy& taxonomy) {
  std::vector<KittiLabelRecord> records;
  for (const auto& obj : sample.objects) records.push_back(to_kitti_record(obj, taxonomy));
  return {write_kitti_label_file(records), write_kitti_calib({sample.camera.matrix()})};
}

}  // namespace det3d::kitti
